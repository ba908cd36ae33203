#include "mvlab/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace mvlab {

namespace {

constexpr double kPivotEps = 1e-11;
constexpr double kFeasEps = 1e-8;

// Dense tableau simplex on min c.x, A x = b, x >= 0. Returns basis in place.
struct Tableau {
    int m, n;                 // constraints, structural columns
    std::vector<double> t;    // (m + 1) x (n + 1), last row objective, last col rhs
    std::vector<int> basis;

    double& at(int r, int c) { return t[static_cast<std::size_t>(r) * (n + 1) + c]; }
    double at(int r, int c) const { return t[static_cast<std::size_t>(r) * (n + 1) + c]; }

    // One simplex phase with Bland's anti-cycling rule on the current
    // objective row. allowed(j) gates entering columns.
    // Returns false when the objective is unbounded below.
    bool iterate(const std::function<bool(int)>& allowed, int& iterations, int max_iterations) {
        for (;;) {
            if (++iterations > max_iterations)
                throw NumericalError("simplex iteration limit exceeded");
            int enter = -1;
            for (int j = 0; j < n; ++j) {
                if (!allowed(j)) continue;
                if (at(m, j) < -kPivotEps) { enter = j; break; }
            }
            if (enter < 0) return true;
            int leave = -1;
            double best = std::numeric_limits<double>::infinity();
            for (int r = 0; r < m; ++r) {
                double a = at(r, enter);
                if (a > kPivotEps) {
                    double ratio = at(r, n) / a;
                    if (ratio < best - kPivotEps ||
                        (ratio < best + kPivotEps && (leave < 0 || basis[r] < basis[leave]))) {
                        best = ratio;
                        leave = r;
                    }
                }
            }
            if (leave < 0) return false;
            pivot(leave, enter);
        }
    }

    void pivot(int r, int c) {
        double p = at(r, c);
        double inv = 1.0 / p;
        for (int j = 0; j <= n; ++j) at(r, j) *= inv;
        at(r, c) = 1.0;
        for (int i = 0; i <= m; ++i) {
            if (i == r) continue;
            double f = at(i, c);
            if (f == 0.0) continue;
            for (int j = 0; j <= n; ++j) at(i, j) -= f * at(r, j);
            at(i, c) = 0.0;
        }
        basis[r] = c;
    }
};

}  // namespace

EqualityResult solve_equality_form(const EqualityForm& lp) {
    const int m = lp.rows, n = lp.cols;
    EqualityResult res;
    Tableau tab;
    tab.m = m;
    tab.n = n + m;  // structural + artificial
    tab.t.assign(static_cast<std::size_t>(m + 1) * (tab.n + 1), 0.0);
    tab.basis.resize(m);

    for (int i = 0; i < m; ++i) {
        double sign = lp.b[i] < 0.0 ? -1.0 : 1.0;
        for (int j = 0; j < n; ++j) tab.at(i, j) = sign * lp.a[static_cast<std::size_t>(i) * n + j];
        tab.at(i, n + i) = 1.0;
        tab.at(i, tab.n) = sign * lp.b[i];
        tab.basis[i] = n + i;
    }
    // Phase 1 objective: minimize sum of artificials (reduced costs via row sums).
    for (int j = 0; j <= tab.n; ++j) {
        double s = 0.0;
        for (int i = 0; i < m; ++i) s += tab.at(i, j);
        tab.at(m, j) = (j >= n && j < tab.n) ? 0.0 : -s;
    }
    int iterations = 0;
    const int max_iter = 50 * (m + tab.n + 16);
    auto structural_only = [n](int j) { return j < n; };
    auto all_cols = [](int) { return true; };
    if (!tab.iterate(all_cols, iterations, max_iter))
        throw NumericalError("phase 1 unbounded, inconsistent tableau");
    double phase1 = -tab.at(m, tab.n);
    if (phase1 > kFeasEps) {
        res.status = LpStatus::infeasible;
        res.iterations = iterations;
        return res;
    }
    // Drive leftover artificials out of the basis where possible.
    for (int r = 0; r < m; ++r) {
        if (tab.basis[r] < n) continue;
        int piv = -1;
        for (int j = 0; j < n; ++j)
            if (std::abs(tab.at(r, j)) > 1e-9) { piv = j; break; }
        if (piv >= 0) tab.pivot(r, piv);
    }
    // Phase 2 objective row.
    for (int j = 0; j <= tab.n; ++j) {
        double cj = (j < n) ? lp.c[j] : 0.0;
        double s = 0.0;
        for (int i = 0; i < m; ++i) {
            int bi = tab.basis[i];
            double cb = (bi < n) ? lp.c[bi] : 0.0;
            s += cb * tab.at(i, j);
        }
        tab.at(m, j) = (j == tab.n) ? -s : cj - s;
    }
    if (!tab.iterate(structural_only, iterations, max_iter)) {
        res.status = LpStatus::unbounded;
        res.iterations = iterations;
        return res;
    }
    res.status = LpStatus::optimal;
    res.iterations = iterations;
    // The corner carries the negated objective throughout (phase 1 reads it the
    // same way), so flip the sign when reporting.
    res.value = -tab.at(m, tab.n);
    res.x.assign(n, 0.0);
    for (int r = 0; r < m; ++r)
        if (tab.basis[r] < n) res.x[tab.basis[r]] = tab.at(r, tab.n);

    // Row multipliers pi solve B^T pi = c_B for the final basis.
    std::vector<double> bt(static_cast<std::size_t>(m) * m, 0.0);
    Vec cb(m, 0.0);
    for (int r = 0; r < m; ++r) {
        int j = tab.basis[r];
        if (j < n) {
            for (int i = 0; i < m; ++i) bt[static_cast<std::size_t>(r) * m + i] = lp.a[static_cast<std::size_t>(i) * n + j];
            cb[r] = lp.c[j];
        } else {
            double sign = lp.b[j - n] < 0.0 ? -1.0 : 1.0;
            bt[static_cast<std::size_t>(r) * m + (j - n)] = sign;
            cb[r] = 0.0;
        }
    }
    // Gaussian elimination with partial pivoting.
    Vec pi = cb;
    std::vector<int> perm(m);
    for (int i = 0; i < m; ++i) perm[i] = i;
    for (int col = 0; col < m; ++col) {
        int best = col;
        for (int r = col + 1; r < m; ++r)
            if (std::abs(bt[static_cast<std::size_t>(r) * m + col]) > std::abs(bt[static_cast<std::size_t>(best) * m + col])) best = r;
        if (best != col) {
            for (int j = 0; j < m; ++j) std::swap(bt[static_cast<std::size_t>(col) * m + j], bt[static_cast<std::size_t>(best) * m + j]);
            std::swap(pi[col], pi[best]);
        }
        double d = bt[static_cast<std::size_t>(col) * m + col];
        if (std::abs(d) < 1e-12) continue;  // redundant row, multiplier stays free
        for (int r = col + 1; r < m; ++r) {
            double f = bt[static_cast<std::size_t>(r) * m + col] / d;
            if (f == 0.0) continue;
            for (int j = col; j < m; ++j) bt[static_cast<std::size_t>(r) * m + j] -= f * bt[static_cast<std::size_t>(col) * m + j];
            pi[r] -= f * pi[col];
        }
    }
    res.multipliers.assign(m, 0.0);
    for (int r = m - 1; r >= 0; --r) {
        double d = bt[static_cast<std::size_t>(r) * m + r];
        if (std::abs(d) < 1e-12) { res.multipliers[r] = 0.0; continue; }
        double s = pi[r];
        for (int j = r + 1; j < m; ++j) s -= bt[static_cast<std::size_t>(r) * m + j] * res.multipliers[j];
        res.multipliers[r] = s / d;
    }
    return res;
}

LpResult maximize_with_rows(int n_vars, const Vec& costs, const std::vector<LinearRow>& rows) {
    if (static_cast<int>(costs.size()) != n_vars)
        throw ArgumentError("cost vector size mismatch");
    // Dual of max{c.x : A x <= b} over free x is min{b.y : A^T y = c, y >= 0}.
    EqualityForm dual;
    dual.rows = n_vars;
    dual.cols = static_cast<int>(rows.size());
    dual.a.assign(static_cast<std::size_t>(dual.rows) * dual.cols, 0.0);
    dual.b = costs;
    dual.c.resize(dual.cols);
    for (int j = 0; j < dual.cols; ++j) {
        dual.c[j] = rows[j].rhs;
        for (auto& [idx, coeff] : rows[j].terms) {
            if (idx < 0 || idx >= n_vars) throw ArgumentError("row index out of range");
            dual.a[static_cast<std::size_t>(idx) * dual.cols + j] = coeff;
        }
    }
    EqualityResult dres = solve_equality_form(dual);
    LpResult out;
    out.iterations = dres.iterations;
    if (dres.status == LpStatus::infeasible) {
        // The primal is feasible in every use here (x = 0), so an infeasible
        // dual certifies an unbounded primal objective.
        out.status = LpStatus::unbounded;
        return out;
    }
    if (dres.status == LpStatus::unbounded) {
        out.status = LpStatus::infeasible;
        return out;
    }
    out.status = LpStatus::optimal;
    out.value = dres.value;
    out.x = dres.multipliers;
    return out;
}

namespace {

// Dinic max-flow with double capacities.
struct FlowNet {
    struct Edge {
        int to;
        double cap;
        int rev;
    };
    std::vector<std::vector<Edge>> g;
    std::vector<int> level, iter;

    explicit FlowNet(int n) : g(n), level(n), iter(n) {}

    void add(int a, int b, double cap) {
        g[a].push_back({b, cap, static_cast<int>(g[b].size())});
        g[b].push_back({a, 0.0, static_cast<int>(g[a].size()) - 1});
    }

    bool bfs(int s, int t) {
        std::fill(level.begin(), level.end(), -1);
        std::queue<int> q;
        level[s] = 0;
        q.push(s);
        while (!q.empty()) {
            int v = q.front();
            q.pop();
            for (auto& e : g[v]) {
                if (e.cap > 1e-14 && level[e.to] < 0) {
                    level[e.to] = level[v] + 1;
                    q.push(e.to);
                }
            }
        }
        return level[t] >= 0;
    }

    double dfs(int v, int t, double f) {
        if (v == t) return f;
        for (int& i = iter[v]; i < static_cast<int>(g[v].size()); ++i) {
            Edge& e = g[v][i];
            if (e.cap > 1e-14 && level[v] < level[e.to]) {
                double d = dfs(e.to, t, std::min(f, e.cap));
                if (d > 0.0) {
                    e.cap -= d;
                    g[e.to][e.rev].cap += d;
                    return d;
                }
            }
        }
        return 0.0;
    }

    double max_flow(int s, int t) {
        double flow = 0.0;
        while (bfs(s, t)) {
            std::fill(iter.begin(), iter.end(), 0);
            double f;
            while ((f = dfs(s, t, std::numeric_limits<double>::infinity())) > 0.0) flow += f;
        }
        return flow;
    }
};

}  // namespace

TransportFeasibility transport_feasible(const Vec& mu_weights, const Vec& nu_weights,
                                        const std::function<bool(std::size_t, std::size_t)>& allowed,
                                        double tol) {
    const std::size_t n = mu_weights.size(), m = nu_weights.size();
    double total_mu = 0.0, total_nu = 0.0;
    for (double w : mu_weights) total_mu += w;
    for (double w : nu_weights) total_nu += w;
    if (std::abs(total_mu - total_nu) > 1e-9)
        throw ArgumentError("transport feasibility needs equal total masses");

    FlowNet net(static_cast<int>(n + m) + 2);
    const int source = 0, sink = static_cast<int>(n + m) + 1;
    for (std::size_t i = 0; i < n; ++i) net.add(source, static_cast<int>(i) + 1, mu_weights[i]);
    for (std::size_t j = 0; j < m; ++j) net.add(static_cast<int>(n + j) + 1, sink, nu_weights[j]);
    const double inf = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j)
            if (allowed(i, j)) net.add(static_cast<int>(i) + 1, static_cast<int>(n + j) + 1, inf);

    double flow = net.max_flow(source, sink);
    TransportFeasibility out;
    out.deficiency = std::max(0.0, total_mu - flow);
    out.feasible = out.deficiency <= tol;
    out.source_side.assign(n, 0);
    if (!out.feasible) {
        // After the last BFS the level array marks the residual-reachable side
        // of the min cut; mu atoms on it form a certificate set.
        net.bfs(source, sink);
        for (std::size_t i = 0; i < n; ++i)
            out.source_side[i] = net.level[static_cast<int>(i) + 1] >= 0 ? 1 : 0;
    }
    return out;
}

}  // namespace mvlab

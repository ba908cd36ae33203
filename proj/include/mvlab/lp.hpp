#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "mvlab/common.hpp"

namespace mvlab {

// Sparse inequality row: sum_k coeff_k * x[idx_k] <= rhs.
struct LinearRow {
    std::vector<std::pair<int, double>> terms;
    double rhs = 0.0;
};

enum class LpStatus { optimal, infeasible, unbounded };

struct LpResult {
    LpStatus status = LpStatus::infeasible;
    double value = 0.0;
    Vec x;           // optimizer of the stated problem
    int iterations = 0;
};

// max c.x subject to rows (x free, bounded feasible region not required: an
// unbounded objective is reported as LpStatus::unbounded). Solved by running a
// dense two-phase simplex on the dual, which keeps the tableau narrow when the
// row count is much larger than the variable count, as it is for pairwise
// Lipschitz constraint systems. The primal optimizer is recovered from the
// dual multipliers.
LpResult maximize_with_rows(int n_vars, const Vec& costs, const std::vector<LinearRow>& rows);

// min c.x subject to A x = b, x >= 0 (dense, two-phase, Bland's rule).
// Exposed mainly for tests; maximize_with_rows is the production entry.
struct EqualityForm {
    int rows = 0, cols = 0;
    Vec a;  // row-major rows x cols
    Vec b;
    Vec c;
};

struct EqualityResult {
    LpStatus status = LpStatus::infeasible;
    double value = 0.0;
    Vec x;
    Vec multipliers;  // one per row, valid when optimal
    int iterations = 0;
};

EqualityResult solve_equality_form(const EqualityForm& lp);

// Feasibility of a transport plan with prescribed marginals supported on the
// allowed cells only (Strassen-type coupling test), decided by max-flow.
struct TransportFeasibility {
    bool feasible = false;
    double deficiency = 0.0;            // mass that cannot be routed
    std::vector<char> source_side;      // per mu-atom: on the deficient cut side
};

TransportFeasibility transport_feasible(const Vec& mu_weights, const Vec& nu_weights,
                                        const std::function<bool(std::size_t, std::size_t)>& allowed,
                                        double tol = 1e-10);

}  // namespace mvlab

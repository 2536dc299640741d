// Bayesian Nash equilibrium strategy coefficients.
//
// Each agent's equilibrium consumption is linear in its mean estimate of the
// augmented preference vector g~ = [g_1..g_N, g_bar]:
//
//     s_i = v_i' E_i[g~] + r_i,   E_i[g~] = T_i g~.
//
// The coefficient vectors solve, for every agent i,
//
//     v_i' T_i + rho lambda * sum_{j != i} (v_j' T_j) T_i = rho e_i',     (v-system)
//     r_i + rho lambda * sum_{j != i} r_j = -rho mu omega_bar.           (r-system)
//
// The v-system as written is rank-deficient but consistent whenever the
// estimation-weight matrices T_j have zero columns (an agent's estimate never
// reads preferences it has no information channel to, e.g. at the start of a
// zone under private information).  Only the effective rows w_i' := v_i' T_i
// are pinned down, and they are exactly what the strategy evaluates.  We
// therefore solve the square nonsingular system in the w_i,
//
//     w_i + rho lambda T_i' * sum_{j != i} w_j = rho e_i,
//
// by dense LU with partial pivoting, and then recover a representative v_i
// from T_i' v_i = w_i by a complete orthogonal decomposition (minimum-norm
// solution; always consistent because the self-knowledge row of T_i is the
// unit row e_i').  The residual of the original systems is verified before
// returning.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <sstream>
#include <vector>

#include "rtpg/errors.hpp"
#include "rtpg/model.hpp"

namespace rtpg {

/// Linear-strategy coefficients for all agents.  Row i of `v` is v_i
/// (length n+1); `effective` stores w_i' = v_i' T_i, the coefficients of the
/// strategy as a function of the realized augmented preference vector.
struct StrategyCoefficients {
    Matrix v;          // n x (n+1)
    Vector r;          // n
    Matrix effective;  // n x (n+1), row i = v_i' T_i
    double residual;   // max-norm fixed-point residual at solve time

    /// Consumption of agent i given its current mean estimate of g~.
    double consumption(int i, const Vector& mean) const {
        return v.row(i).dot(mean) + r[i];
    }
};

/// Symmetric closed-form strategy s_i = a (g_i - ref) + b (ref - mu omega_bar),
/// where ref is the prior mean (private regime) or the realized population
/// mean (complete regime).
struct ClosedFormCoefficients {
    double a;  // weight on the deviation g_i - ref
    double b;  // weight on the (renewable-adjusted) reference level
    Behavior behavior;
    InfoRegime info;

    double evaluate(double g_i, double reference, double omega_bar, double mu) const {
        return a * (g_i - reference) + b * (reference - omega_bar * mu);
    }
};

/// Best response to a known expected total consumption of the other agents.
inline double best_response(const BehaviorConstants& c, double g_i, double omega_bar,
                            double expected_sum_of_others) {
    return c.rho * (g_i - c.mu * omega_bar - c.lambda * expected_sum_of_others);
}

/// Max-norm residual of the equilibrium fixed-point systems at the given
/// coefficients; zero at an exact equilibrium.
inline double equilibrium_residual(const StrategyCoefficients& coeffs,
                                   const std::vector<Matrix>& weights,
                                   const BehaviorConstants& c, double omega_bar) {
    const int n = static_cast<int>(weights.size());
    const int dim = n + 1;
    Matrix effective(n, dim);  // w_j' = v_j' T_j
    for (int j = 0; j < n; ++j) effective.row(j) = coeffs.v.row(j) * weights[j];
    const Eigen::RowVectorXd total = effective.colwise().sum();
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        Eigen::RowVectorXd row = effective.row(i);
        row += c.rho * c.lambda * (total - effective.row(i)) * weights[i];
        row[i] -= c.rho;
        worst = std::max(worst, row.cwiseAbs().maxCoeff());
        const double r_res = coeffs.r[i] + c.rho * c.lambda * (coeffs.r.sum() - coeffs.r[i]) +
                             c.rho * c.mu * omega_bar;
        worst = std::max(worst, std::abs(r_res));
    }
    return worst;
}

namespace detail {
constexpr double kResidualTolerance = 1e-9;  // ~100x machine epsilon at model scales
}

/// Solve the equilibrium coefficient systems for the given estimation-weight
/// matrices.  Throws SolverFailure (with a condition estimate) if the stacked
/// system is singular or the fixed-point residual exceeds 1e-9.
inline StrategyCoefficients solve_bne(const BehaviorConstants& c,
                                      const std::vector<Matrix>& weights, double omega_bar) {
    const int n = static_cast<int>(weights.size());
    if (n < 1) throw InvalidParameter("solve_bne: at least one agent required");
    const int dim = n + 1;
    for (const Matrix& t : weights)
        if (t.rows() != dim || t.cols() != dim)
            throw InvalidParameter("solve_bne: estimation weights must be (n+1) x (n+1)");

    const double coupling = c.rho * c.lambda;

    // Stacked system in the effective rows w_i.
    Matrix lhs = Matrix::Identity(n * dim, n * dim);
    Vector rhs = Vector::Zero(n * dim);
    for (int i = 0; i < n; ++i) {
        const Matrix block = coupling * weights[i].transpose();
        for (int j = 0; j < n; ++j)
            if (j != i) lhs.block(i * dim, j * dim, dim, dim) = block;
        rhs[i * dim + i] = c.rho;
    }
    Eigen::PartialPivLU<Matrix> lu(lhs);
    const double rcond = lu.rcond();
    if (!(rcond > 1e-13)) {
        std::ostringstream msg;
        msg << "solve_bne: stacked coefficient system is singular to working precision "
            << "(reciprocal condition estimate " << rcond << ")";
        throw SolverFailure(msg.str());
    }
    const Vector w = lu.solve(rhs);

    StrategyCoefficients out;
    out.effective.resize(n, dim);
    out.v.resize(n, dim);
    for (int i = 0; i < n; ++i) {
        out.effective.row(i) = w.segment(i * dim, dim);
        // Recover v_i from T_i' v_i = w_i (minimum-norm solution).
        Eigen::CompleteOrthogonalDecomposition<Matrix> cod(weights[i].transpose());
        out.v.row(i) = cod.solve(out.effective.row(i).transpose());
    }

    // r-system: identical coupling, scalar unknowns.
    Matrix rsys = Matrix::Identity(n, n) + coupling * (Matrix::Ones(n, n) - Matrix::Identity(n, n));
    Eigen::PartialPivLU<Matrix> rlu(rsys);
    if (!(rlu.rcond() > 1e-13))
        throw SolverFailure("solve_bne: r-system is singular to working precision");
    out.r = rlu.solve(Vector::Constant(n, -c.rho * c.mu * omega_bar));

    out.residual = equilibrium_residual(out, weights, c, omega_bar);
    if (!(out.residual <= detail::kResidualTolerance)) {
        std::ostringstream msg;
        msg << "solve_bne: fixed-point residual " << out.residual << " exceeds "
            << detail::kResidualTolerance << " (reciprocal condition estimate " << rcond << ")";
        throw SolverFailure(msg.str());
    }
    return out;
}

/// Closed form under private information with sigma-correlated preferences.
inline ClosedFormCoefficients closed_form_private(const BehaviorConstants& c, double sigma,
                                                  int n) {
    if (n < 1) throw InvalidParameter("closed_form_private: n must be >= 1");
    if (!(sigma >= 0.0 && sigma <= 1.0))
        throw InvalidParameter("closed_form_private: sigma must lie in [0, 1]");
    const double others = static_cast<double>(n - 1);
    const double a = c.rho / (1.0 + c.lambda * c.rho * sigma * others);
    const double b = c.rho / (1.0 + c.lambda * c.rho * others);
    return {a, b, c.model, InfoRegime::Private};
}

/// Closed form under complete information (each agent knows its own
/// preference and the realized population total).  The deviation weight
/// degenerates at lambda * rho = 1.
inline ClosedFormCoefficients closed_form_complete(const BehaviorConstants& c, int n) {
    if (n < 1) throw InvalidParameter("closed_form_complete: n must be >= 1");
    const double denom = 1.0 - c.lambda * c.rho;
    if (std::abs(denom) < 1e-12)
        throw InvalidParameter("closed_form_complete: degenerate parameters (lambda * rho = 1)");
    const double others = static_cast<double>(n - 1);
    const double a = c.rho / denom;
    const double b = c.rho / (1.0 + c.lambda * c.rho * others);
    return {a, b, c.model, InfoRegime::Complete};
}

}  // namespace rtpg

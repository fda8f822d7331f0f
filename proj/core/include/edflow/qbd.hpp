#pragma once

#include <filesystem>
#include <vector>

#include <Eigen/Dense>

#include "edflow/model.hpp"

namespace edflow {

// Generator blocks of the level-dependent QBD. Level i is the urgent count,
// phase j the non-urgent count (0..k). Levels at or above h share A_h.
struct QbdBlocks {
    ModelParams params;
    DerivedParams derived;
    std::vector<Eigen::MatrixXd> A; // A_0 .. A_h

    int h() const { return derived.h; }
    int phases() const { return derived.phases; }

    // Up block B = lambda_u I and down block C_i = mu_u min(i, c) I are scalar
    // multiples of the identity; the rates are what the solvers use.
    double up_rate() const { return derived.lambda_u; }
    double down_rate(int level) const;
    const Eigen::MatrixXd& within(int level) const;
    Eigen::MatrixXd up() const;
    Eigen::MatrixXd down(int level) const;
};

// Throws ParameterError on invalid params and StabilityError when
// lambda_u >= c mu_u.
QbdBlocks build_blocks(const ModelParams& params);

enum class SolveMethod {
    level_reduction,    // x_i = x_{i-1} R_i, eliminated from the top level down
    backward_recursion, // x_i = x_h U_i; loses precision once h grows past ~15
};

class StationaryDistribution {
public:
    StationaryDistribution(std::vector<Eigen::RowVectorXd> rows, double rho, int k);

    int h() const { return static_cast<int>(rows_.size()) - 1; }
    int k() const { return k_; }
    int phases() const { return static_cast<int>(rows_.front().size()); }
    double rho() const { return rho_; }
    const std::vector<Eigen::RowVectorXd>& x_rows() const { return rows_; }

    // Exact for every level; levels above h follow x_h rho^(i-h).
    // Throws std::out_of_range for a negative level or a phase outside 0..k.
    double pi(int i, int j) const;
    double level_mass(int i) const;
    double total_mass() const;

private:
    std::vector<Eigen::RowVectorXd> rows_;
    double rho_;
    int k_;
};

StationaryDistribution solve(const QbdBlocks& blocks,
                             SolveMethod method = SolveMethod::level_reduction);
StationaryDistribution solve(const ModelParams& params,
                             SolveMethod method = SolveMethod::level_reduction);

// Geometric sums over the repeating levels i >= h:
//   level_count = sum rho^(i-h)   = 1/(1-rho)
//   level_index = sum i rho^(i-h) = h/(1-rho) + rho/(1-rho)^2
// and the same sums weighted by x_h phase by phase.
struct TailSums {
    double level_count = 0.0;
    double level_index = 0.0;
    Eigen::RowVectorXd mass;        // x_h * level_count
    Eigen::RowVectorXd index_mass;  // x_h * level_index
};

TailSums tail_sums(const StationaryDistribution& dist);

// Largest infinity-norm of x_{i-1} B + x_i A_i + x_{i+1} C_{i+1} over levels
// 0..h, with x_{h+1} = rho x_h.
double balance_residual(const StationaryDistribution& dist, const QbdBlocks& blocks);

// sum_i p(i) |q(i) - p(i)| / p(i) where q is the QBD urgent marginal and p the
// exact M/M/c marginal with c = c_u + c_n. Levels with p(i) below 1e-300 are
// skipped; the geometric tail is summed in closed form.
double validate_mmc(const StationaryDistribution& dist, const ModelParams& params);

// One CSV per block (A_0..A_h, B, C_1..C_h) and one for the x rows.
void dump_blocks_csv(const QbdBlocks& blocks, const StationaryDistribution& dist,
                     const std::filesystem::path& dir);

} // namespace edflow

#include "edflow/qbd.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "edflow/errors.hpp"
#include "edflow/fixed_partition.hpp"
#include "edflow/io.hpp"

namespace edflow {

namespace {

constexpr double kNegativeTolerance = 1e-12;
constexpr double kMinRcond = 1e-15;

Eigen::MatrixXd within_level_block(int i, const ModelParams& p, const DerivedParams& d) {
    const int n = d.phases;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    const double leave_level = d.lambda_u + p.mu_u * servers_urgent(i, p);
    for (int j = 0; j < n; ++j) {
        double out = leave_level;
        if (j + 1 < n) {
            const double up = d.lambda_n * alpha(i, j, p);
            a(j, j + 1) = up;
            out += up;
        }
        if (j > 0) {
            const double down = p.mu_n * servers_nonurgent(i, j, p);
            a(j, j - 1) = down;
            out += down;
        }
        a(j, j) = -out;
    }
    return a;
}

// Solves x M = 0 with x w = 1 by swapping the last column of M for w.
Eigen::RowVectorXd solve_boundary(Eigen::MatrixXd m, const Eigen::VectorXd& w) {
    const Eigen::Index n = m.rows();
    m.col(n - 1) = w;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(m.transpose());
    const double rcond = lu.rcond();
    if (!(rcond > kMinRcond)) {
        std::ostringstream msg;
        msg << "boundary system is singular to working precision (rcond estimate " << rcond
            << ", size " << n << ")";
        throw NumericalError(msg.str());
    }
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs(n - 1) = 1.0;
    return lu.solve(rhs).transpose();
}

std::vector<Eigen::RowVectorXd> by_level_reduction(const QbdBlocks& b) {
    const int h = b.h();
    const int n = b.phases();
    const double rho = b.derived.rho_u;
    const double lu = b.up_rate();
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);

    // R_i maps x_{i-1} to x_i. At level h the tail gives x_{h+1} C_{h+1} =
    // lambda_u x_h, and A_h + lambda_u I = -c mu_u I, so R_h = rho I.
    std::vector<Eigen::MatrixXd> r(h + 1);
    r[h] = rho * eye;
    for (int i = h - 1; i >= 1; --i) {
        Eigen::MatrixXd m = b.within(i) + b.down_rate(i + 1) * r[i + 1];
        r[i] = -lu * Eigen::PartialPivLU<Eigen::MatrixXd>(m).inverse();
    }

    // w_i = total mass of levels >= i per unit of x_i.
    Eigen::VectorXd w = Eigen::VectorXd::Ones(n) / (1.0 - rho);
    for (int i = h - 1; i >= 0; --i) w = Eigen::VectorXd::Ones(n) + r[i + 1] * w;

    Eigen::MatrixXd m0 = b.within(0);
    if (h >= 1) m0 += b.down_rate(1) * r[1];

    std::vector<Eigen::RowVectorXd> x(h + 1);
    x[0] = solve_boundary(m0, w);
    for (int i = 1; i <= h; ++i) x[i] = x[i - 1] * r[i];
    return x;
}

std::vector<Eigen::RowVectorXd> by_backward_recursion(const QbdBlocks& b) {
    const int h = b.h();
    const int n = b.phases();
    const double rho = b.derived.rho_u;
    const double lu = b.up_rate();
    if (!(lu > 0.0))
        throw ParameterError("p_u", "backward recursion needs a positive urgent arrival rate");
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);

    std::vector<Eigen::MatrixXd> u(h + 1);
    u[h] = eye;
    if (h >= 1) u[h - 1] = -b.within(h) / lu - eye;
    for (int i = h - 1; i >= 1; --i)
        u[i - 1] = -(u[i] * b.within(i) + b.down_rate(i + 1) * u[i + 1]) / lu;

    Eigen::MatrixXd m = u[0] * b.within(0);
    if (h >= 1) m += b.down_rate(1) * u[1];

    Eigen::MatrixXd total = eye / (1.0 - rho);
    for (int i = 0; i < h; ++i) total += u[i];
    const Eigen::VectorXd w = total * Eigen::VectorXd::Ones(n);

    const Eigen::RowVectorXd xh = solve_boundary(m, w);
    std::vector<Eigen::RowVectorXd> x(h + 1);
    for (int i = 0; i <= h; ++i) x[i] = xh * u[i];
    return x;
}

} // namespace

double QbdBlocks::down_rate(int level) const {
    return params.mu_u * servers_urgent(level, params);
}

const Eigen::MatrixXd& QbdBlocks::within(int level) const {
    return A[static_cast<std::size_t>(std::min(level, h()))];
}

Eigen::MatrixXd QbdBlocks::up() const {
    return up_rate() * Eigen::MatrixXd::Identity(phases(), phases());
}

Eigen::MatrixXd QbdBlocks::down(int level) const {
    return down_rate(level) * Eigen::MatrixXd::Identity(phases(), phases());
}

QbdBlocks build_blocks(const ModelParams& params) {
    QbdBlocks b;
    b.params = params;
    b.derived = derive(params);
    require_stable(params, CapacityMode::nested);
    b.A.reserve(static_cast<std::size_t>(b.derived.h) + 1);
    for (int i = 0; i <= b.derived.h; ++i) b.A.push_back(within_level_block(i, params, b.derived));
    return b;
}

StationaryDistribution::StationaryDistribution(std::vector<Eigen::RowVectorXd> rows, double rho,
                                               int k)
    : rows_(std::move(rows)), rho_(rho), k_(k) {
    if (rows_.empty()) throw std::invalid_argument("StationaryDistribution: no rows");
}

double StationaryDistribution::pi(int i, int j) const {
    if (i < 0) throw std::out_of_range("level " + std::to_string(i) + " is negative");
    if (j < 0 || j >= phases())
        throw std::out_of_range("phase " + std::to_string(j) + " outside 0.." +
                                std::to_string(phases() - 1));
    if (i <= h()) return rows_[static_cast<std::size_t>(i)](j);
    return rows_.back()(j) * std::pow(rho_, i - h());
}

double StationaryDistribution::level_mass(int i) const {
    if (i < 0) throw std::out_of_range("level " + std::to_string(i) + " is negative");
    if (i <= h()) return rows_[static_cast<std::size_t>(i)].sum();
    return rows_.back().sum() * std::pow(rho_, i - h());
}

double StationaryDistribution::total_mass() const {
    double s = 0.0;
    for (int i = 0; i < h(); ++i) s += rows_[static_cast<std::size_t>(i)].sum();
    return s + rows_.back().sum() / (1.0 - rho_);
}

StationaryDistribution solve(const QbdBlocks& blocks, SolveMethod method) {
    std::vector<Eigen::RowVectorXd> x = method == SolveMethod::level_reduction
                                            ? by_level_reduction(blocks)
                                            : by_backward_recursion(blocks);

    double worst = 0.0;
    for (auto& row : x)
        for (Eigen::Index j = 0; j < row.size(); ++j) {
            if (!std::isfinite(row(j)))
                throw NumericalError("stationary solve produced a non-finite probability");
            worst = std::min(worst, row(j));
            if (row(j) < 0.0) row(j) = 0.0;
        }
    if (worst < -kNegativeTolerance) {
        std::ostringstream msg;
        msg << "stationary solve produced a negative probability " << worst;
        throw NumericalError(msg.str());
    }

    StationaryDistribution dist(std::move(x), blocks.derived.rho_u, blocks.params.k);
    const double mass = dist.total_mass();
    if (!(mass > 0.0)) throw NumericalError("stationary solve produced zero total mass");
    std::vector<Eigen::RowVectorXd> rows = dist.x_rows();
    for (auto& row : rows) row /= mass;
    return StationaryDistribution(std::move(rows), blocks.derived.rho_u, blocks.params.k);
}

StationaryDistribution solve(const ModelParams& params, SolveMethod method) {
    return solve(build_blocks(params), method);
}

TailSums tail_sums(const StationaryDistribution& dist) {
    const double rho = dist.rho();
    const double h = dist.h();
    TailSums t;
    t.level_count = 1.0 / (1.0 - rho);
    t.level_index = h / (1.0 - rho) + rho / ((1.0 - rho) * (1.0 - rho));
    t.mass = dist.x_rows().back() * t.level_count;
    t.index_mass = dist.x_rows().back() * t.level_index;
    return t;
}

double balance_residual(const StationaryDistribution& dist, const QbdBlocks& blocks) {
    const auto& x = dist.x_rows();
    const int h = dist.h();
    double worst = 0.0;
    for (int i = 0; i <= h; ++i) {
        Eigen::RowVectorXd r = x[i] * blocks.within(i);
        if (i > 0) r += blocks.up_rate() * x[i - 1];
        const Eigen::RowVectorXd next = i < h ? x[i + 1] : Eigen::RowVectorXd(x[h] * dist.rho());
        r += blocks.down_rate(i + 1) * next;
        worst = std::max(worst, r.lpNorm<Eigen::Infinity>());
    }
    return worst;
}

double validate_mmc(const StationaryDistribution& dist, const ModelParams& params) {
    const DerivedParams d = derive(params);
    const ErlangMarginal exact = erlang_mmc(d.lambda_u / params.mu_u, d.c_total);
    constexpr double floor = 1e-300;
    const int h = dist.h();
    double err = 0.0;
    for (int i = 0; i < h; ++i) {
        const double p = exact.probability(i);
        if (p < floor) continue;
        err += std::abs(dist.level_mass(i) - p);
    }
    // Levels >= h >= c: both marginals decay by rho, so the relative error is
    // the level-h one and its weight is P(N_u >= h).
    const double ph = exact.probability(h);
    if (ph >= floor) {
        const double rel = std::abs(dist.level_mass(h) - ph) / ph;
        err += rel * exact.tail_from(h);
    }
    return err;
}

void dump_blocks_csv(const QbdBlocks& blocks, const StationaryDistribution& dist,
                     const std::filesystem::path& dir) {
    const int n = blocks.phases();
    std::vector<std::string> header{"level", "phase"};
    for (int j = 0; j < n; ++j) header.push_back("to_" + std::to_string(j));

    auto dump = [&](const std::string& name, int level, const Eigen::MatrixXd& m) {
        CsvTable t(header);
        for (int j = 0; j < n; ++j) {
            t.cell(level).cell(j);
            for (int c = 0; c < n; ++c) t.cell(m(j, c));
            t.end_row();
        }
        t.save(dir / (name + ".csv"));
    };
    for (int i = 0; i <= blocks.h(); ++i) dump("A_" + std::to_string(i), i, blocks.within(i));
    dump("B", -1, blocks.up());
    for (int i = 1; i <= blocks.h(); ++i) dump("C_" + std::to_string(i), i, blocks.down(i));

    CsvTable xs({"level", "phase", "probability"});
    for (int i = 0; i <= dist.h(); ++i)
        for (int j = 0; j < dist.phases(); ++j) {
            xs.cell(i).cell(j).cell(dist.pi(i, j));
            xs.end_row();
        }
    xs.save(dir / "x_rows.csv");
}

} // namespace edflow

#include "fraglab/operators.hpp"

#include <cmath>
#include <ostream>

#include "fraglab/error.hpp"

namespace fraglab {

const Eigen::MatrixXd& OperatorSet::matrix(OperatorKind which) const {
    switch (which) {
        case OperatorKind::Fragmentation: return frag;
        case OperatorKind::Transport: return transport;
        case OperatorKind::Generator: return generator;
    }
    throw Error(ErrorKind::InvalidArgument, "unknown operator kind");
}

Eigen::MatrixXd raw_gain_matrix(const FragmentationModel& model, const Grid& grid) {
    const auto n = static_cast<Eigen::Index>(grid.size());
    Eigen::MatrixXd gain = Eigen::MatrixXd::Zero(n, n);
    // Row i: trapezoid rule for int_{x_i}^{x_max} b(y, x_i) u(y) dy on nodes i..n-1.
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        const double xi = grid.node(static_cast<std::size_t>(i));
        for (Eigen::Index j = i; j < n; ++j) {
            const auto uj = static_cast<std::size_t>(j);
            const double xj = grid.node(uj);
            if (xj <= 0.0) continue;
            double tau = 0.0;
            if (j > i) tau += 0.5 * grid.step(uj - 1);
            if (j + 1 < n) tau += 0.5 * grid.step(uj);
            gain(i, j) = tau * model.kernel(xj, xi);
        }
    }
    return gain;
}

void apply_conservative_correction(Eigen::MatrixXd& gain, const FragmentationModel& model,
                                   const Grid& grid) {
    const Eigen::VectorXd m = grid.moment_weights();
    for (Eigen::Index j = 0; j < gain.cols(); ++j) {
        const auto uj = static_cast<std::size_t>(j);
        const double xj = grid.node(uj);
        if (xj <= 0.0) continue;
        const double carried = m.dot(gain.col(j));
        if (!(carried > 0.0)) {
            // No fragment lands on a node with mass (e.g. p vanishing at both ends of
            // a short column): the class cannot fragment at this resolution.
            gain.col(j).setZero();
            gain(j, j) = model.rate(xj);
            continue;
        }
        const double target = grid.weight(uj) * xj * model.rate(xj);
        gain.col(j) *= target / carried;
    }
}

OperatorSet assemble_operators(const FragmentationModel& model, const Grid& grid) {
    const auto n = static_cast<Eigen::Index>(grid.size());

    Eigen::MatrixXd frag = raw_gain_matrix(model, grid);
    apply_conservative_correction(frag, model, grid);
    for (Eigen::Index i = 0; i < n; ++i) {
        frag(i, i) -= model.rate(grid.node(static_cast<std::size_t>(i)));
    }

    // Differentiate the flux x u.
    Eigen::MatrixXd transport = sbp_derivative_matrix(grid) * grid.x().asDiagonal();

    Eigen::MatrixXd generator = model.gamma() * frag - transport;
    generator.diagonal().array() -= 1.0;

    if (!generator.allFinite()) {
        throw Error(ErrorKind::NumericalFailure, "assembled generator has non-finite entries");
    }
    return OperatorSet{std::move(frag), std::move(transport), std::move(generator), model, grid};
}

StateVector apply_operator(const OperatorSet& op, OperatorKind which, const StateVector& u) {
    require_on_grid(op.grid, u, "state");
    return op.matrix(which) * u;
}

ConservationDefect conservation_defect(const OperatorSet& op, const StateVector& u) {
    require_on_grid(op.grid, u, "state");
    const Eigen::VectorXd m = op.grid.moment_weights();
    return {std::abs(m.dot(op.frag * u)), std::abs(m.dot(op.generator * u))};
}

void write_matrix_csv(std::ostream& out, const OperatorSet& op, OperatorKind which) {
    const Eigen::MatrixXd& a = op.matrix(which);
    const auto old_precision = out.precision(17);
    out << "# N=" << a.rows() << ",gamma=" << op.model.gamma() << ",x_max=" << op.grid.x_max()
        << '\n';
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            if (j) out << ',';
            out << a(i, j);
        }
        out << '\n';
    }
    out.precision(old_precision);
}

}  // namespace fraglab

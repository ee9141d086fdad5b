#pragma once

#include <iosfwd>

#include <Eigen/Dense>

#include "fraglab/coefficients.hpp"
#include "fraglab/grid.hpp"

namespace fraglab {

enum class OperatorKind { Fragmentation, Transport, Generator };

/**
 * Dense discretisations on one grid:
 *
 *   frag       F_h: trapezoid-tail gain minus the exact loss diagonal B(x_i)
 *   transport  T_h: u -> (x u)'
 *   generator  A_h = -T_h - I + gamma F_h, the self-similar operator
 *
 * Gain columns are rescaled so that sum_i w_i x_i gain(i, j) = w_j x_j B(x_j):
 * fragmentation of the size class x_j moves mass but never creates it.
 */
struct OperatorSet {
    Eigen::MatrixXd frag;
    Eigen::MatrixXd transport;
    Eigen::MatrixXd generator;
    FragmentationModel model;
    Grid grid;

    const Eigen::MatrixXd& matrix(OperatorKind which) const;
};

OperatorSet assemble_operators(const FragmentationModel& model, const Grid& grid);

/// Gain part of F_h before the conservative correction.
Eigen::MatrixXd raw_gain_matrix(const FragmentationModel& model, const Grid& grid);

/// Rescales each gain column j with x_j > 0 to carry exactly the mass the loss
/// term removes. A column that reaches no node with mass gets B(x_j) on its
/// diagonal instead, so that size class does not fragment at all.
void apply_conservative_correction(Eigen::MatrixXd& gain, const FragmentationModel& model,
                                   const Grid& grid);

StateVector apply_operator(const OperatorSet& op, OperatorKind which, const StateVector& u);

struct ConservationDefect {
    double frag;     // |sum w x (F_h u)|
    double selfsim;  // |sum w x (A_h u)|
};

ConservationDefect conservation_defect(const OperatorSet& op, const StateVector& u);

/// Row-major CSV dump: one comment header line with N, gamma and x_max, then N rows.
void write_matrix_csv(std::ostream& out, const OperatorSet& op, OperatorKind which);

}  // namespace fraglab

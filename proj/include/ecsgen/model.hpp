#pragma once

#include <Eigen/Dense>

#include "ecsgen/errors.hpp"

namespace ecsgen {

// Branch choice for the projected superposition of the two field branches:
// plus  -> (e^{-iut}|alpha,beta> + e^{+iut}|-alpha,-beta>) / sqrt(M+)
// minus -> (e^{-iut}|alpha,beta> - e^{+iut}|-alpha,-beta>) / sqrt(M-)
enum class BranchSign { plus, minus };

// Atomic levels. `a` is the lower level; `b` and `c` are the upper doublet,
// b <-> a couples to cavity mode 2, c <-> a couples to cavity mode 1.
enum class AtomLevel { a = 0, b = 1, c = 2 };

// Dressed levels of the classical drive: eigenvalues 0, +u, -u.
enum class DressedLevel { A = 0, B = 1, C = 2 };

// Model parameters. Rates are in units of the vacuum couplings; the drive
// Rabi frequencies omega1 (c<->a) and omega2 (b<->a) set the dressed
// splitting u = sqrt(omega1^2 + omega2^2).
struct ModelParams {
    double omega1 = 0.0; // classical Rabi frequency on c <-> a
    double omega2 = 0.0; // classical Rabi frequency on b <-> a
    double g1 = 0.0;     // cavity coupling, mode 1 on c <-> a
    double g2 = 0.0;     // cavity coupling, mode 2 on b <-> a
    double kappa = 0.0;  // cavity amplitude decay rate (equal for both modes)
    BranchSign sign = BranchSign::plus;
    bool strong_driving = false; // recorded at construction, never enforced

    ModelParams() = default;
    ModelParams(double omega1_, double omega2_, double g1_, double g2_,
                double kappa_ = 0.0, BranchSign sign_ = BranchSign::plus);
};

// u = sqrt(omega1^2 + omega2^2). Throws std::domain_error on non-positive input.
double rabi_norm(double omega1, double omega2);

// Orthogonal change of basis between the bare atomic levels (a,b,c) and the
// dressed levels (A,B,C) of the classical drive:
//   |A> = (-omega1 |b> + omega2 |c>) / u                   eigenvalue 0
//   |B> = ( u |a> + omega2 |b> + omega1 |c>) / (sqrt2 u)   eigenvalue  u
//   |C> = (-u |a> + omega2 |b> + omega1 |c>) / (sqrt2 u)   eigenvalue -u
struct DressedFrame {
    double u = 0.0;
    // Row i holds the coefficients of dressed state i over (a,b,c).
    Eigen::Matrix3d basis_change = Eigen::Matrix3d::Zero();

    Eigen::Vector3d eigenvalues() const { return {0.0, u, -u}; }

    // Coefficients over (a,b,c) -> coefficients over (A,B,C) and back.
    Eigen::Vector3d to_dressed(const Eigen::Vector3d& bare) const {
        return basis_change * bare;
    }
    Eigen::Vector3d to_bare(const Eigen::Vector3d& dressed) const {
        return basis_change.transpose() * dressed;
    }

    // Dressed state as a column over (a,b,c).
    Eigen::Vector3d dressed_ket(DressedLevel lv) const {
        return basis_change.row(static_cast<int>(lv)).transpose();
    }
};

DressedFrame dressed_frame(const ModelParams& p);

// Coefficients of a bare level over (A,B,C).
Eigen::Vector3d atomic_in_dressed(AtomLevel level, const DressedFrame& frame);

// Drive Hamiltonian in the bare basis (a,b,c):
//   H0 = omega1 (|c><a| + |a><c|) + omega2 (|b><a| + |a><b|)
Eigen::Matrix3d drive_hamiltonian(const ModelParams& p);

} // namespace ecsgen

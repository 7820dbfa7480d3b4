#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "tb4/reduction.hpp"

namespace tb4 {

struct EffectiveSplit {
    double v_eff = 0.0;
    /// Coefficient of L3^2 in the kinetic energy at p = 0.
    double keff_coefficient = 0.0;
    double inertia1 = 0.0;
    double inertia2 = 0.0;
};

struct EffectivePotential {
    EffectiveSplit split;
    double value = 0.0;
    Vec4 gradient = Vec4::Zero();
    Mat4 hessian = Mat4::Zero();
    /// Separate centrifugal and potential parts of the gradient, used to
    /// judge how well the two balance.
    Vec4 centrifugal_gradient = Vec4::Zero();
    Vec4 potential_gradient = Vec4::Zero();
};

/// V_eff = (mu1^2 / I1 + mu2^2 / I2) / 2 + V with
/// 1/I1 = (q1^2/nu2 + q3^2/nu1)/(4A^2), 1/I2 = (q2^2/nu2 + q4^2/nu1)/(4A^2).
EffectivePotential effective_potential(const MassTriple& masses, const Vec4& q, double mu1, double mu2);
EffectivePotential effective_potential(const MassTriple& masses, const Vec4& q, double mu1, double mu2,
                                       const Potential& potential);

/// Coefficient of L3^2 in the expansion of kinetic_f(qi, qj, L3, ...).
double kinetic_c2(double qi, double qj, double area, double mu1, double mu2);

struct KeffCorrection {
    double coefficient = 0.0;
    /// coefficient > 0, which is sufficient for a positive definite momentum block.
    bool sufficient = false;
    Mat4 momentum_hessian = Mat4::Zero();
    bool momentum_block_positive = false;
};

KeffCorrection keff_correction(const MassTriple& masses, const Vec4& q, double mu1, double mu2);

/// Eigenvalues of a symmetric matrix in ascending order, computed with cyclic
/// Jacobi rotations and a relative off-diagonal threshold so that small
/// eigenvalues of graded matrices keep their relative accuracy.
Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& matrix);

enum class Classification { minimum, saddle, indefinite_k };

std::string to_string(Classification c);

struct EquilibriumReport {
    MassTriple masses{1.0, 1.0, 1.0};
    Vec4 q = Vec4::Zero();
    double mu1 = 0.0;
    double mu2 = 0.0;
    Mat8 hessian = Mat8::Zero();
    Vec8 eigenvalues = Vec8::Zero();
    int negative_q = 0;
    int negative_p = 0;
    Classification classification = Classification::saddle;
    double keff_coefficient = 0.0;
    double omega1 = 0.0;
    double omega2 = 0.0;
    double kepler1 = 0.0;
    double kepler2 = 0.0;
    double energy = 0.0;
    double h = 0.0;
    double b = 0.0;
    /// max_i |dV_eff/dq_i| / (|centrifugal_i| + |potential_i|).
    double gradient_residual = 0.0;
    int iterations = 0;
};

/// Assembles the report for a critical point of V_eff at p = 0.
EquilibriumReport analyze_equilibrium(const MassTriple& masses, const Vec4& q, double mu1, double mu2);

struct IsoscelesParams {
    double n = 1.0;
    double t = 0.1;
    double rho() const { return 4.0 * t / (1.0 - t * t); }
};

struct IsoscelesMomenta {
    double mu1_sq = 0.0;
    double mu2_sq = 0.0;
};

/// Momenta for which (rho, 0, 0, 1) is critical, masses (n, 1, 1).
IsoscelesMomenta isosceles_momenta(double n, double t);

struct IsoscelesBlocks {
    Eigen::Matrix2d q23 = Eigen::Matrix2d::Zero();
    Eigen::Matrix2d q14 = Eigen::Matrix2d::Zero();
    Eigen::Matrix2d p23 = Eigen::Matrix2d::Zero();
    double p1 = 0.0;  // 1/nu1
    double p4 = 0.0;  // 1/nu2
};

IsoscelesBlocks isosceles_hessian_blocks(double n, double t);

/// Masses (n, 1, 1) and q = (rho, 0, 0, 1).
EquilibriumReport isosceles_equilibrium(double n, double t);

/// Residuals of the two isosceles equilibrium conditions, each relative to
/// the magnitude of its terms.
std::array<double, 2> isosceles_condition_residual(double n, double t, double mu1, double mu2);

struct StabilityPolynomials {
    double p1 = 0.0;
    double p2 = 0.0;
};

StabilityPolynomials stability_polynomials(double n, double t);

inline const double equilateral_t = 2.0 - std::sqrt(3.0);

struct RegionInfo {
    /// 1..6 for the regions, 0 on a boundary curve, -1 for sign patterns outside the six regions.
    int id = 0;
    std::string label;
    bool boundary = false;
    bool minimum = false;
    int negative_q23 = 0;
    int negative_q14 = 0;
    int negative_p23 = 0;
};

RegionInfo region_classification(double n, double t, double boundary_tolerance = 1e-6);

double solvability_residual(const MassTriple& masses, const Vec4& q);

/// Left minus right sides of the four equilibrium equations simplified with
/// the solvability condition.
Vec4 simplified_equilibrium_residual(const MassTriple& masses, const Vec4& q, double mu1, double mu2);

struct GeneralSeriesParams {
    double kappa = 0.0;
    double u = 0.0;
    double mu_ratio = 0.0;

    static GeneralSeriesParams from_u(const MassTriple& masses, double u);
    static GeneralSeriesParams from_mu_ratio(const MassTriple& masses, double mu_ratio);
};

/// Series for the general-mass equilibrium in units where kappa mu1^2 = 1.
Vec4 general_series_equilibrium(const MassTriple& masses, double u);

/// Momenta (mu1, mu2) with kappa mu1^2 = 1 for the given u.
std::array<double, 2> general_momenta(const MassTriple& masses, double u);

struct NewtonOptions {
    int max_iterations = 100;
    double tolerance = 1e-12;
};

/// Damped Newton iteration on grad V_eff = 0, solved in units where
/// kappa mu1^2 = 1 and rescaled afterwards.
EquilibriumReport newton_equilibrium(const MassTriple& masses, double mu1, double mu2, const Vec4& seed,
                                     const NewtonOptions& options = {});

/// Predicted eigenvalues of the Hessian of V_eff, in units of m2 m3 / q4^3.
std::array<double, 4> general_hessian_eigen_asymptotics(const MassTriple& masses, double u);

struct Frequencies {
    double omega1 = 0.0;
    double omega2 = 0.0;
    /// omega1^2 q4^3 / M and omega2^2 q1^3 / (m2 + m3); both tend to 1 in the Kepler limit.
    double kepler1 = 0.0;
    double kepler2 = 0.0;
};

Frequencies frequencies(const MassTriple& masses, const EquilibriumReport& report);

/// Masses reordered so that the binary pair (i, j), 1-based, becomes bodies 2 and 3.
MassTriple binary_pair_masses(const std::array<double, 3>& m, int i, int j);

struct ScanRow {
    double param = 0.0;
    double mu1 = 0.0;
    double mu2 = 0.0;
    double h = 0.0;
    double b = 0.0;
    double neg_inv_h = 0.0;
    std::string cls;
    std::array<double, 8> eig{};
    bool ok = true;
};

/// Energy-momentum curve of the isosceles family over a t grid.
std::vector<ScanRow> energy_momentum_scan_isosceles(double n, const std::vector<double>& t_grid, int workers = 0);

/// Energy-momentum curve of the general family over a u grid.
std::vector<ScanRow> energy_momentum_scan_general(const MassTriple& masses, const std::vector<double>& u_grid,
                                                  int workers = 0);

struct RegionRow {
    double n = 0.0;
    double t = 0.0;
    StabilityPolynomials poly;
    RegionInfo region;
};

std::vector<RegionRow> region_map(double n_max, int grid);

/// Runs fn(i) for i in [0, count) on a pool of worker threads (0 = hardware concurrency).
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn);

/// Logarithmically spaced grid including both end points.
std::vector<double> log_grid(double lo, double hi, int count);

}  // namespace tb4

#pragma once

#include "tstlab/geometry.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace tstlab {

//! f: R^d -> R^m sampled on a regular lattice.
struct SampledFunction
{
    int d = 1;
    int m = 1;
    Matrix x;  //!< d x N lattice points
    Matrix f;  //!< m x N values
    double pitch = 0;
    Eigen::VectorXd lo;            //!< lattice origin
    std::vector<long> shape;       //!< lattice points per axis (axis 0 fastest)
    std::optional<double> lipschitz;
    Eigen::VectorXd support_lo, support_hi;

    using Fn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

    //! Samples fn on lo + pitch * Z^d inside the box [lo, hi]. Throws if a
    //! declared Lipschitz constant is exceeded by more than 1%.
    static SampledFunction on_lattice(int d, int m, const Eigen::VectorXd& lo,
                                      const Eigen::VectorXd& hi, double pitch, const Fn& fn,
                                      const Eigen::VectorXd& support_lo,
                                      const Eigen::VectorXd& support_hi,
                                      std::optional<double> lipschitz = std::nullopt);

    std::size_t size() const { return static_cast<std::size_t>(x.cols()); }
    //! Largest difference quotient between lattice neighbours.
    double empirical_lipschitz() const;
    double support_diameter() const { return (support_hi - support_lo).norm(); }
    std::vector<std::size_t> in_ball(const Ball& B) const;
};

struct OmegaResult
{
    double value = 0;
    Matrix A;           //!< m x d linear part of the witness
    Eigen::VectorXd b;  //!< offset: witness(y) = A y + b
    bool degenerate = false;
    double pitch = 0;
    std::size_t samples = 0;
};

//! p = +inf selects the sup version.
OmegaResult omega_p(const SampledFunction& f, const Ball& B, double p);

//! Ω at a fixed affine map.
double omega_at(const SampledFunction& f, const Ball& B, double p, const Matrix& A,
                const Eigen::VectorXd& b);

struct OmegaCube
{
    int level = 0;
    Eigen::VectorXd center;
    double side = 0;
    double omega = 0;
};

struct OmegaReport
{
    double p = 2;
    int depth = 0;
    std::vector<OmegaCube> cubes;
    double sum_sq = 0;   //!< Σ Ω(3B_I)^2 ℓ(I)^d
    double sum_p = 0;    //!< Σ Ω(3B_I)^p ℓ(I)^d
    double normalization = 0;  //!< diam(supp f)^d ‖f‖_Lip^2
    double ratio_sq() const { return normalization > 0 ? sum_sq / normalization : 0; }
    double ratio_p() const { return normalization > 0 ? sum_p / normalization : 0; }
};

//! Dyadic cubes of the support box down to `depth` levels below it.
OmegaReport omega_sum(const SampledFunction& f, double p, int depth, int threads = 0);

struct BoundPair
{
    double lhs = 0;
    double rhs = 0;
};

//! (Ω_∞(B/2), Ω_1(B)^{1/(d+1)}) for f bi-Lipschitz with constant L.
BoundPair omega_infty_bound_check(const SampledFunction& f, const Ball& B, double L);

//! (β^{d,p}_Σ(B(x,r)) at the image of Ω's witness, (|B|/r^d)^{1/p} Ω_{f,p}(B))
//! with Σ = f(lattice) and B a domain ball containing f^{-1}(Σ ∩ B(x,r)).
BoundPair beta_from_omega(const SampledFunction& f, const Point& x, double r,
                          const Ball& B, double p);

}  // namespace tstlab

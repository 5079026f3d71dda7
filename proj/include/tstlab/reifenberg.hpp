#pragma once

#include "tstlab/cubes.hpp"
#include "tstlab/geometry.hpp"
#include "tstlab/kdtree.hpp"

#include <cstdint>
#include <iosfwd>
#include <functional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace tstlab {

struct CcbpLayer
{
    std::vector<Point> centers;
    std::vector<AffinePlane> planes;
};

//! Coherent collection of balls and planes; layer k has radius r_k = 10^-k.
struct CCBP
{
    AffinePlane P0;
    std::vector<CcbpLayer> layers;

    static double r(int k);
    int dim() const { return P0.dim(); }
    int ambient() const { return P0.ambient(); }
    int num_layers() const { return static_cast<int>(layers.size()); }
};

class CcbpError : public std::runtime_error
{
  public:
    CcbpError(std::string condition, int k, long i, long j, const std::string& what)
        : std::runtime_error(what), condition(std::move(condition)), k(k), i(i), j(j) {}
    std::string condition;
    int k;
    long i, j;
};

//! Per-layer kd-trees over the centers, plus a memo of
//! d_{x_{i,l}, 10^4 r_l}(P_{j,k}, P_{i,l}) keyed by (k, j, l, i).
//! Lookups are const and thread-safe; pair() is not.
class CcbpIndex
{
  public:
    explicit CcbpIndex(const CCBP& c);

    const CCBP& ccbp() const { return *c_; }
    //! Centers of layer k with |x - x_{j,k}| <= radius.
    std::vector<std::size_t> within(int k, const Point& x, double radius) const;
    std::size_t nearest(int k, const Point& x, double* dist = nullptr) const;
    double pair(int k, std::size_t j, int l, std::size_t i);

  private:
    const CCBP* c_;
    std::vector<Matrix> pts_;
    std::vector<KdTree> trees_;
    std::unordered_map<std::uint64_t, double> memo_;
};

struct EpsilonProfile
{
    std::vector<std::vector<double>> eps;  //!< eps[k][j] = ε_k(x_{j,k})
    double profile_max = 0;
    //! Largest measured value of conditions (2)-(5).
    double cond2 = 0, cond3 = 0, cond4 = 0, cond5 = 0;
    bool valid = false;
};

//! Throws CcbpError on separation, layer-descent or center-on-plane violations.
EpsilonProfile validate_ccbp(const CCBP& c, double eps);

//! ε_k(x) (balls 100B) and ε'_k(x) (balls 10B) at an arbitrary point.
double epsilon_k(CcbpIndex& idx, int k, const Point& x);
double epsilon_prime_k(CcbpIndex& idx, int k, const Point& x);

//! C² bump: 1 on [0,8], 0 on [10,inf), monotone between.
double bump(double s);

struct PartitionValue
{
    std::vector<std::pair<std::size_t, double>> weights;  //!< (j, θ_{j,k}(y)), θ > 0
    double psi = 1;
};

//! θ_{j,k} = φ_j / m(Φ) with m(Φ) = Φ + (1 - Φ)_+^3, so Σθ = 1 where Φ >= 1.
PartitionValue partition_of_unity(const CcbpIndex& idx, int k, const Point& y);
Point sigma_k(const CcbpIndex& idx, int k, const Point& y);

//! Samples f_k of a regular lattice of P0.
struct SurfaceIterate
{
    int d = 1;
    double h = 0;
    std::vector<long> shape;  //!< lattice points per axis (axis 0 fastest)
    Matrix coords;            //!< d x G frame coordinates on P0
    std::vector<Matrix> images;  //!< images[k] = f_k(grid), n x G
    std::vector<double> displacement;  //!< sup |f_{k+1} - f_k|
    int layers_applied() const { return static_cast<int>(images.size()) - 1; }
    const Matrix& surface() const { return images.back(); }
    std::size_t size() const { return static_cast<std::size_t>(coords.cols()); }
};

class DisplacementViolation : public std::logic_error
{
  public:
    using std::logic_error::logic_error;
};

//! Applies σ_0 .. σ_{K-1} to the lattice of pitch h on P0 ∩ [-extent, extent]^d
//! (frame coordinates). Stops early at the last layer or once 10 r_k < h/10.
//! extent <= 0 picks the layer-0 span plus 12.
SurfaceIterate iterate(const CCBP& c, double h, int K, double extent = 0);

struct CertifyOptions
{
    double eps = 0.01;
    std::uint64_t seed = 7;
    int pairs = 2000;
    int flatness_samples = 60;
    int content_samples = 30;
    int sigma_samples = 2000;
    double ceil_tau = 0.5;
    double ceil_f_id = 20;       //!< item 4, in units of ε
    double ceil_flat = 20;       //!< item 9, in units of ε
    double ceil_sigma = 20;      //!< item 10, in units of ε
    double ceil_sigma_pi = 50;   //!< item 11
    double floor_content = 0.1;  //!< item 13
};

struct CertificateItem
{
    std::string item;
    std::string description;
    double measured = 0;   //!< raw measured quantity
    double constant = 0;   //!< measured / normalisation
    double ceiling = 0;
    bool pass = true;
    std::vector<double> per_level;
};

struct CertificateReport
{
    double eps = 0;
    std::vector<CertificateItem> items;
    bool pass() const;
    const CertificateItem& at(const std::string& item) const;
};

CertificateReport certify(const SurfaceIterate& s, const CCBP& c, const CertifyOptions& opt = {});

class NotAGraph : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

struct GraphFit
{
    double a_center = 0;   //!< |A(x_{j,k})| at the nearest sample
    double lipschitz = 0;  //!< empirical Lipschitz constant of A
    double residual = 0;
    double floor = 0;
    std::size_t samples = 0;
};

//! Graph of Σ_k ∩ D(x_{j,k}, P_{j,k}, 49 r_k) over P_{j,k}; throws NotAGraph.
GraphFit local_graph_fit(const SurfaceIterate& s, const CCBP& c, int k, std::size_t j);

struct BilipCertificate
{
    double M = 0;
    double distortion = 1;
    double lower = 1, upper = 1;
};

BilipCertificate bilip_certificate(const SurfaceIterate& s, const CCBP& c, int pairs = 2000,
                                   std::uint64_t seed = 11);

//! Layered chain with P_{j,k} the P0 coordinate plane rotated by angle
//! tilt[k] in the (e_0, e_d) plane, centers on a 2 r_k lattice within
//! 10 r_k of the origin.
CCBP tilt_chain(int d, int n, const std::vector<double>& tilt);

struct TreeCcbp
{
    CCBP ccbp;
    Point origin;       //!< x_{Q(S)}
    double unit = 1;    //!< ell(Q(S)); ccbp coordinates are (y - origin) / unit
    std::vector<int> levels;  //!< cube level s(k) used for layer k
    std::vector<std::string> warnings;
};

//! Layers are maximal r_k-separated subsets of the centers of S ∩ D_{s(k)},
//! s(k) the first level with ell_s / ell(Q(S)) <= r_k.
TreeCcbp ccbp_from_tree(const CubeTree& tree, const StoppingTimeRegion& S,
                        const std::function<AffinePlane(int)>& witness);

//! OFF mesh of the surface sample (d = 2, first three coordinates).
void write_off(std::ostream& os, const SurfaceIterate& s);

}  // namespace tstlab

#pragma once

#include "tstlab/content.hpp"
#include "tstlab/cubes.hpp"
#include "tstlab/geometry.hpp"
#include "tstlab/kdtree.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace tstlab {

enum class BetaKind { beta_inf, beta_dp, bbeta, eta };

const char* to_string(BetaKind k);

struct BetaOptions
{
    //! E ∩ B is thinned by a greedy net to at most this many points.
    std::size_t max_points = 512;
    int max_sweeps = 200;
    double rel_improvement = 1e-6;
    //! Smallest pattern step (offsets in units of r_B, angles in radians).
    double min_step = 1e-7;
    //! Plane-side grid pitch / r_B for the reported value.
    double grid_fraction = 1.0 / 64;
    //! Plane-side grid pitch / r_B during the search.
    double search_grid_fraction = 1.0 / 16;
    ChoquetRange range = ChoquetRange::unit;
    //! Search stops as soon as the objective drops below this (if >= 0).
    double stop_below = -1;
    //! Optional kd-tree over all of E (must index E.points()).
    const KdTree* index = nullptr;
};

struct BetaValue
{
    double value = 0;
    AffinePlane plane;
    BetaKind kind = BetaKind::beta_inf;
    Ball ball;
    double p = 0;
    bool degenerate = false;
    int evaluations = 0;
    //! Number of points the value was computed on.
    std::size_t sample_size = 0;
};

//! (2/r_B) inf_L sup_{E∩B} dist(y, L).
BetaValue beta_inf(const PointCloud& E, const Ball& B, int d, const BetaOptions& opt = {});
//! (2/r_B) sup_{E∩B} dist(y, L) at a fixed plane.
double beta_inf_at(const PointCloud& E, const Ball& B, const AffinePlane& L);

//! Choquet β^{d,p}; minimized over planes unless L is given.
BetaValue beta_dp(const PointCloud& E, const Ball& B, int d, double p,
                  const std::optional<AffinePlane>& L = std::nullopt,
                  const BetaOptions& opt = {});

//! inf_P d_B(E, P).
BetaValue bbeta(const PointCloud& E, const Ball& B, int d, const BetaOptions& opt = {});
//! d_B(E, P) at a fixed plane, same discretization as bbeta.
double bbeta_at(const PointCloud& E, const Ball& B, const AffinePlane& P,
                const BetaOptions& opt = {});

//! (1/r_B) sup over the grid of L ∩ B of dist(x, E), reduced by E's resolution.
double eta_inf(const PointCloud& E, const Ball& B, const AffinePlane& L,
               const BetaOptions& opt = {});

//! True iff bbeta(E, A·B_Q).value >= eps.
bool bwgl_classify(const CubeTree& tree, int Q, double A, double eps, int d,
                   const BetaOptions& opt = {});

struct TstParams
{
    double C0 = 2;
    double A = 3;
    double eps = 0.05;
    int d = 1;
    double p = 2;
    //! Levels below Q0 to include; negative means down to the finest level.
    int depth = -1;
    BetaOptions beta;
    int threads = 0;
};

struct CubeBeta
{
    int id = -1;
    int level = 0;
    double beta = 0;
    bool degenerate = false;
    bool bwgl = false;
    double ell_d = 0;
};

struct DepthPartial
{
    int depth = 0;
    double tst_sum = 0;
    double bwgl_sum = 0;
    double measure_estimate = 0;
};

struct TSTReport
{
    int root = -1;
    int root_level = 0;
    //! Finest level included.
    int K = 0;
    TstParams params;
    std::vector<CubeBeta> cubes;  //!< sorted by id
    double ell_root_d = 0;
    double tst_sum = 0;
    double bwgl_sum = 0;
    double measure_estimate = 0;
    //! Sums truncated at each depth 0..K - root_level.
    std::vector<DepthPartial> partials;
    std::vector<std::string> warnings;
};

TSTReport tst_report(const CubeTree& tree, int Q0, const TstParams& params);

//! (Σ r_i^d) / R^d for disjoint balls inside B lying near P.
double env_packing_check(const std::vector<Ball>& balls, const AffinePlane& P,
                         const Ball& B, int d);

struct AngleControl
{
    bool skipped = false;
    std::string reason;
    double angle = 0;
    double sup_ancestor_beta = 0;
    double beta_Q = 0;
    double beta_R = 0;
};

//! Angle between the β^{d,1}(M B_Q) and β^{d,1}(M B_R) witness planes.
AngleControl angle_control_check(const CubeTree& tree, int Q, int R, double M,
                                 double Lambda, double eps, int d,
                                 const BetaOptions& opt = {});

}  // namespace tstlab

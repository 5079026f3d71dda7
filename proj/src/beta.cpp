#include "tstlab/beta.hpp"

#include "tstlab/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <sstream>

namespace tstlab {

const char* to_string(BetaKind k)
{
    switch (k)
    {
    case BetaKind::beta_inf: return "beta_inf";
    case BetaKind::beta_dp: return "beta_dp";
    case BetaKind::bbeta: return "bbeta";
    case BetaKind::eta: return "eta";
    }
    return "?";
}

namespace {

std::vector<std::size_t> ball_indices(const PointCloud& E, const Ball& B, const BetaOptions& opt)
{
    if (B.center.size() != E.ambient())
        throw InputError("dimension mismatch between ball and cloud");
    if (opt.index)
        return opt.index->within(B.center, B.radius * B.radius);
    return E.indices_in(B);
}

struct Sample
{
    Matrix pts;
    double h = 0;
};

// Greedy net of E[idx] at the smallest tried radius giving <= cap points.
Sample decimate(const PointCloud& E, const std::vector<std::size_t>& idx, double r, int d,
                std::size_t cap)
{
    Sample s;
    s.h = E.resolution();
    Matrix all(E.ambient(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i)
        all.col(static_cast<Eigen::Index>(i)) = E.point(idx[i]);
    if (idx.size() <= cap)
    {
        s.pts = std::move(all);
        return s;
    }
    KdTree kd(all);
    const std::size_t M = idx.size();
    std::vector<char> covered(M);
    std::vector<std::size_t> net;
    double rad = 2 * r / std::pow(static_cast<double>(cap), 1.0 / d);
    for (;;)
    {
        std::fill(covered.begin(), covered.end(), 0);
        net.clear();
        const double r2 = rad * rad;
        for (std::size_t i = 0; i < M && net.size() <= cap; ++i)
        {
            if (covered[i])
                continue;
            net.push_back(i);
            covered[i] = 1;
            kd.for_each_strictly_within(all.col(static_cast<Eigen::Index>(i)), r2,
                                        [&](std::size_t j) { covered[j] = 1; });
        }
        if (net.size() <= cap)
            break;
        rad *= 1.25;
    }
    s.pts.resize(E.ambient(), static_cast<Eigen::Index>(net.size()));
    for (std::size_t i = 0; i < net.size(); ++i)
        s.pts.col(static_cast<Eigen::Index>(i)) = all.col(static_cast<Eigen::Index>(net[i]));
    s.h = std::max(s.h, rad);
    return s;
}

// PCA frame plus the normal directions the search may tilt into.
struct Frame
{
    Point c;
    Matrix F, N;
    double r = 1;
    int d = 1, m = 1;
    int rank = 0;

    int nparams() const { return m + d * m; }

    AffinePlane make(const Eigen::VectorXd& x) const
    {
        Matrix Fr = F, Nr = N;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < m; ++j)
            {
                const double a = x[m + i * m + j];
                if (a == 0)
                    continue;
                const double ca = std::cos(a), sa = std::sin(a);
                Eigen::VectorXd fi = Fr.col(i), nj = Nr.col(j);
                Fr.col(i) = ca * fi + sa * nj;
                Nr.col(j) = -sa * fi + ca * nj;
            }
        Point b = c + r * (N * x.head(m));
        return AffinePlane::from_orthonormal(std::move(b), std::move(Fr));
    }
};

Frame pca_frame(const Matrix& pts, int d, double r)
{
    const int n = static_cast<int>(pts.rows());
    Frame fr;
    fr.d = d;
    fr.r = r;
    fr.m = std::min(n - d, std::max(d, 2));
    fr.c = pts.rowwise().mean();
    Matrix Y = pts.colwise() - fr.c;
    Matrix C = Y * Y.transpose();
    Eigen::SelfAdjointEigenSolver<Matrix> es(C);
    const Matrix& V = es.eigenvectors();
    const auto& ev = es.eigenvalues();
    auto col = [&](int k) {
        Eigen::VectorXd v = V.col(n - 1 - k);
        Eigen::Index at;
        v.cwiseAbs().maxCoeff(&at);
        if (v[at] < 0)
            v = -v;
        return v;
    };
    fr.F.resize(n, d);
    fr.N.resize(n, fr.m);
    for (int k = 0; k < d; ++k)
        fr.F.col(k) = col(k);
    for (int k = 0; k < fr.m; ++k)
        fr.N.col(k) = col(d + k);
    const double tol = static_cast<double>(pts.cols()) * (1e-10 * r) * (1e-10 * r);
    fr.rank = 0;
    for (int k = 0; k < n; ++k)
        if (ev[k] > tol)
            ++fr.rank;
    return fr;
}

Eigen::ArrayXd plane_dists(const Matrix& pts, const AffinePlane& P)
{
    Matrix Y = pts.colwise() - P.base();
    Matrix R = Y - P.frame() * (P.frame().transpose() * Y);
    return R.colwise().norm().transpose().array();
}

// Frame coordinates of the lattice of P ∩ B, same enumeration as plane_grid.
Matrix lattice(int d, double rho2, double pitch)
{
    const int m = static_cast<int>(std::floor(std::sqrt(rho2) / pitch));
    std::vector<double> buf;
    Eigen::VectorXd t(d);
    std::function<void(int, double)> rec = [&](int axis, double used) {
        if (axis == d)
        {
            buf.insert(buf.end(), t.data(), t.data() + d);
            return;
        }
        for (int i = -m; i <= m; ++i)
        {
            double v = i * pitch;
            double u = used + v * v;
            if (u > rho2)
                continue;
            t[axis] = v;
            rec(axis + 1, u);
        }
    };
    rec(0, 0.0);
    return Eigen::Map<Matrix>(buf.data(), d, static_cast<Eigen::Index>(buf.size() / d));
}

// sup over the grid of P ∩ B of max(0, dist(g, S) - h); -1 if P misses B.
double grid_side(const AffinePlane& P, const Ball& B, double pitch, const KdTree& kd,
                 double h)
{
    Point c = P.project(B.center);
    double rho2 = B.radius * B.radius - sq_dist(c, B.center);
    if (rho2 < 0)
        return -1;
    Matrix G = (P.frame() * lattice(P.dim(), rho2, pitch)).colwise() + c;
    double s = 0;
    for (Eigen::Index i = 0; i < G.cols(); ++i)
    {
        double q;
        kd.nearest(G.col(i), &q);
        s = std::max(s, std::sqrt(q) - h);
    }
    return s;
}

struct SearchResult
{
    Eigen::VectorXd x;
    double f = 0;
    int evals = 0;
};

SearchResult pattern_search(const Frame& fr, const std::function<double(const AffinePlane&)>& obj,
                            const BetaOptions& opt, bool diagonals, double min_step)
{
    const int P = fr.nparams();
    SearchResult res;
    res.x = Eigen::VectorXd::Zero(P);
    res.f = obj(fr.make(res.x));
    res.evals = 1;
    double step = 0.1;
    auto done = [&] { return res.f <= 0 || (opt.stop_below >= 0 && res.f < opt.stop_below); };
    for (int sweep = 0; sweep < opt.max_sweeps && !done(); ++sweep)
    {
        const double before = res.f;
        bool improved = false;
        auto attempt = [&](const Eigen::VectorXd& y) {
            double fy = obj(fr.make(y));
            ++res.evals;
            if (fy < res.f)
            {
                res.f = fy;
                res.x = y;
                return true;
            }
            return false;
        };
        for (int k = 0; k < P && !done(); ++k)
            for (double sg : {1.0, -1.0})
            {
                Eigen::VectorXd y = res.x;
                y[k] += sg * step;
                if (attempt(y))
                {
                    improved = true;
                    break;
                }
            }
        if (diagonals && !improved)
            for (int k = 0; k < P && !improved; ++k)
                for (int l = k + 1; l < P && !improved; ++l)
                    for (double sk : {1.0, -1.0})
                    {
                        for (double sl : {1.0, -1.0})
                        {
                            Eigen::VectorXd y = res.x;
                            y[k] += sk * step;
                            y[l] += sl * step;
                            if (attempt(y))
                            {
                                improved = true;
                                break;
                            }
                        }
                        if (improved)
                            break;
                    }
        if (!improved || before - res.f <= opt.rel_improvement * before)
        {
            step *= 0.5;
            if (step < min_step)
                break;
        }
    }
    return res;
}

void check_dims(const PointCloud& E, int d)
{
    if (d < 1 || d >= E.ambient())
        throw InputError("plane dimension must satisfy 1 <= d < n");
}

struct Prepared
{
    std::vector<std::size_t> idx;
    Sample sample;
    Frame frame;
    bool degenerate = false;
};

Prepared prepare(const PointCloud& E, const Ball& B, int d, const BetaOptions& opt)
{
    check_dims(E, d);
    Prepared pr;
    pr.idx = ball_indices(E, B, opt);
    if (pr.idx.empty())
        throw InputError("E ∩ B is empty");
    pr.sample = decimate(E, pr.idx, B.radius, d, opt.max_points);
    pr.frame = pca_frame(pr.sample.pts, d, B.radius);
    pr.degenerate = pr.frame.rank < d;
    return pr;
}

BetaValue make_value(BetaKind kind, const Ball& B, double p)
{
    BetaValue v;
    v.kind = kind;
    v.ball = B;
    v.p = p;
    return v;
}

double dp_value(const ContentEstimator& est, const Matrix& pts, const AffinePlane& L,
                const Ball& B, double p, ChoquetRange range)
{
    Eigen::ArrayXd dist = plane_dists(pts, L) / B.radius;
    std::vector<double> f(dist.data(), dist.data() + dist.size());
    double I = choquet_integral(est, f, p, range);
    return std::pow(std::max(I, 0.0) / std::pow(B.radius, est.d()), 1.0 / p);
}

}  // namespace

//---------------------------------------------------------------------------//

double beta_inf_at(const PointCloud& E, const Ball& B, const AffinePlane& L)
{
    if (L.ambient() != E.ambient())
        throw InputError("dimension mismatch between plane and cloud");
    auto idx = E.indices_in(B);
    if (idx.empty())
        throw InputError("E ∩ B is empty");
    double s = 0;
    for (auto i : idx)
        s = std::max(s, L.dist(E.point(i)));
    return 2 * s / B.radius;
}

BetaValue beta_inf(const PointCloud& E, const Ball& B, int d, const BetaOptions& opt)
{
    Prepared pr = prepare(E, B, d, opt);
    BetaValue v = make_value(BetaKind::beta_inf, B, 0);
    v.sample_size = pr.idx.size();
    if (pr.degenerate)
    {
        v.degenerate = true;
        v.plane = pr.frame.make(Eigen::VectorXd::Zero(pr.frame.nparams()));
        return v;
    }
    const Matrix& S = pr.sample.pts;
    auto obj = [&](const AffinePlane& P) { return plane_dists(S, P).maxCoeff(); };
    SearchResult sr = pattern_search(pr.frame, obj, opt, true, opt.min_step);
    v.plane = pr.frame.make(sr.x);
    v.evaluations = sr.evals;
    double s = 0;
    for (auto i : pr.idx)
        s = std::max(s, v.plane.dist(E.point(i)));
    v.value = 2 * s / B.radius;
    return v;
}

BetaValue beta_dp(const PointCloud& E, const Ball& B, int d, double p,
                  const std::optional<AffinePlane>& L, const BetaOptions& opt)
{
    if (!(p >= 1))
        throw InputError("beta_dp: p must be >= 1");
    if (L && L->dim() != d)
        throw InputError("beta_dp: plane dimension differs from d");
    Prepared pr = prepare(E, B, d, opt);
    BetaValue v = make_value(BetaKind::beta_dp, B, p);
    const Matrix& S = pr.sample.pts;
    v.sample_size = static_cast<std::size_t>(S.cols());
    PointCloud base(S, pr.sample.h);
    ContentEstimator est(base, d);
    if (L)
    {
        v.plane = *L;
        v.value = dp_value(est, S, *L, B, p, opt.range);
        v.evaluations = 1;
        return v;
    }
    if (pr.degenerate)
    {
        v.degenerate = true;
        v.plane = pr.frame.make(Eigen::VectorXd::Zero(pr.frame.nparams()));
        return v;
    }
    auto obj = [&](const AffinePlane& P) { return dp_value(est, S, P, B, p, opt.range); };
    SearchResult sr = pattern_search(pr.frame, obj, opt, false, std::max(opt.min_step, 1e-5));
    v.plane = pr.frame.make(sr.x);
    v.value = sr.f;
    v.evaluations = sr.evals;
    return v;
}

namespace {

struct FullIndex
{
    std::unique_ptr<KdTree> own;
    const KdTree* kd = nullptr;
};

FullIndex full_index(const PointCloud& E, const BetaOptions& opt)
{
    FullIndex fi;
    if (opt.index)
        fi.kd = opt.index;
    else
    {
        fi.own = std::make_unique<KdTree>(E.points());
        fi.kd = fi.own.get();
    }
    return fi;
}

double bbeta_eval(const PointCloud& E, const std::vector<std::size_t>& idx, const Ball& B,
                  const AffinePlane& P, const KdTree& kd, double grid_fraction)
{
    double s = 0;
    for (auto i : idx)
        s = std::max(s, P.dist(E.point(i)));
    double g = grid_side(P, B, grid_fraction * B.radius, kd, E.resolution());
    if (g < 0)
        throw OneSidedUndefined(OneSidedUndefined::Side::second, "P ∩ B is empty");
    return std::max(s, g) / B.radius;
}

}  // namespace

double bbeta_at(const PointCloud& E, const Ball& B, const AffinePlane& P, const BetaOptions& opt)
{
    if (P.ambient() != E.ambient())
        throw InputError("dimension mismatch between plane and cloud");
    auto idx = ball_indices(E, B, opt);
    if (idx.empty())
        throw OneSidedUndefined(OneSidedUndefined::Side::first, "E ∩ B is empty");
    FullIndex fi = full_index(E, opt);
    return bbeta_eval(E, idx, B, P, *fi.kd, opt.grid_fraction);
}

BetaValue bbeta(const PointCloud& E, const Ball& B, int d, const BetaOptions& opt)
{
    Prepared pr = prepare(E, B, d, opt);
    BetaValue v = make_value(BetaKind::bbeta, B, 0);
    v.sample_size = pr.idx.size();
    if (pr.degenerate)
    {
        v.degenerate = true;
        v.plane = pr.frame.make(Eigen::VectorXd::Zero(pr.frame.nparams()));
        return v;
    }
    const Matrix& S = pr.sample.pts;
    // the nearest point of E to any grid point of B lies in 3B
    auto near_idx = ball_indices(E, B.scaled(3), opt);
    Sample near = decimate(E, near_idx, 3 * B.radius, d, 2 * opt.max_points);
    KdTree near_kd(near.pts);
    // a point of the sampled set is within the net radius of a net point plus
    // the sampling gap
    const double reach = static_cast<std::size_t>(near.pts.cols()) < near_idx.size()
                             ? near.h + E.resolution()
                             : E.resolution();
    const double pitch = opt.search_grid_fraction * B.radius;
    auto obj = [&](const AffinePlane& P) {
        double s = plane_dists(S, P).maxCoeff();
        double g = grid_side(P, B, pitch, near_kd, reach);
        if (g < 0)
            return kInf;
        return std::max(s, g) / B.radius;
    };
    SearchResult sr = pattern_search(pr.frame, obj, opt, true, std::max(opt.min_step, 1e-5));
    v.plane = pr.frame.make(sr.x);
    v.evaluations = sr.evals;
    FullIndex fi = full_index(E, opt);
    v.value = bbeta_eval(E, pr.idx, B, v.plane, *fi.kd, opt.grid_fraction);
    return v;
}

double eta_inf(const PointCloud& E, const Ball& B, const AffinePlane& L, const BetaOptions& opt)
{
    if (L.ambient() != E.ambient() || B.center.size() != E.ambient())
        throw InputError("dimension mismatch");
    if (E.empty())
        throw InputError("eta_inf: empty cloud");
    FullIndex fi = full_index(E, opt);
    double g = grid_side(L, B, opt.grid_fraction * B.radius, *fi.kd, E.resolution());
    if (g < 0)
        throw InputError("eta_inf: L ∩ B is empty");
    return g / B.radius;
}

bool bwgl_classify(const CubeTree& tree, int Q, double A, double eps, int d,
                   const BetaOptions& opt)
{
    if (eps <= 0)
        return true;
    const Cube& c = tree.cube(Q);
    BetaOptions o = opt;
    o.stop_below = eps;
    return bbeta(tree.cloud(), tree.ball(c).scaled(A), d, o).value >= eps;
}

//---------------------------------------------------------------------------//

TSTReport tst_report(const CubeTree& tree, int Q0, const TstParams& params)
{
    if (!(params.p >= 1 && params.p < critical_exponent(params.d)))
        throw InputError("tst_report: p must satisfy 1 <= p < p(d)");
    if (!(params.C0 > 1))
        throw InputError("tst_report: C0 must exceed 1");
    if (!(params.A > 1))
        throw InputError("tst_report: A must exceed 1");
    check_dims(tree.cloud(), params.d);
    TSTReport rep;
    rep.root = Q0;
    rep.params = params;
    const Cube& root = tree.cube(Q0);
    rep.root_level = root.level;
    rep.K = params.depth < 0 ? tree.depth() : std::min(tree.depth(), root.level + params.depth);
    if (params.A < 1e5)
    {
        std::ostringstream os;
        os << "A = " << params.A << " is below the theoretical floor 1e5";
        rep.warnings.push_back(os.str());
    }
    const double d = params.d;
    rep.ell_root_d = std::pow(tree.ell(root), d);

    std::vector<int> ids = tree.descendants(Q0, rep.K);
    std::sort(ids.begin(), ids.end());
    KdTree index(tree.cloud().points());
    BetaOptions bo = params.beta;
    bo.index = &index;
    rep.cubes.resize(ids.size());
    parallel_for(
        ids.size(),
        [&](std::size_t i) {
            const Cube& Q = tree.cube(ids[i]);
            CubeBeta& row = rep.cubes[i];
            row.id = Q.id;
            row.level = Q.level;
            row.ell_d = std::pow(tree.ell(Q), d);
            Ball BQ = tree.ball(Q);
            BetaValue b = beta_dp(tree.cloud(), BQ.scaled(params.C0), params.d, params.p,
                                  std::nullopt, bo);
            row.beta = b.value;
            row.degenerate = b.degenerate;
            row.bwgl = bwgl_classify(tree, Q.id, params.A, params.eps, params.d, bo);
        },
        params.threads);

    const int D = rep.K - rep.root_level;
    rep.partials.resize(static_cast<std::size_t>(D + 1));
    std::vector<double> tst_lvl(D + 1, 0.0), bwgl_lvl(D + 1, 0.0), meas_lvl(D + 1, 0.0);
    for (const auto& row : rep.cubes)
    {
        const int k = row.level - rep.root_level;
        tst_lvl[k] += row.beta * row.beta * row.ell_d;
        if (row.bwgl)
            bwgl_lvl[k] += row.ell_d;
        meas_lvl[k] += row.ell_d;
    }
    double t = rep.ell_root_d, b = 0;
    for (int k = 0; k <= D; ++k)
    {
        t += tst_lvl[k];
        b += bwgl_lvl[k];
        rep.partials[k] = DepthPartial{k, t, b, meas_lvl[k]};
    }
    rep.tst_sum = t;
    rep.bwgl_sum = b;
    rep.measure_estimate = meas_lvl[D];
    return rep;
}

//---------------------------------------------------------------------------//

double env_packing_check(const std::vector<Ball>& balls, const AffinePlane& P, const Ball& B,
                         int d)
{
    const double tol = 1e-12 * (1 + B.radius);
    double sum = 0;
    for (std::size_t i = 0; i < balls.size(); ++i)
    {
        const Ball& b = balls[i];
        auto fail = [&](const std::string& why) {
            std::ostringstream os;
            os << "env_packing_check: ball " << i << " " << why;
            throw InputError(os.str());
        };
        if (b.radius > B.radius + tol)
            fail("has radius above R");
        if (std::sqrt(sq_dist(b.center, B.center)) + b.radius > B.radius + tol)
            fail("is not contained in B");
        if (!(P.dist(b.center) < b.radius / 2))
            fail("is not within r_i/2 of the plane");
        for (std::size_t j = 0; j < i; ++j)
            if (std::sqrt(sq_dist(b.center, balls[j].center)) + tol < b.radius + balls[j].radius)
                fail("overlaps ball " + std::to_string(j));
        sum += std::pow(b.radius, d);
    }
    return sum / std::pow(B.radius, d);
}

AngleControl angle_control_check(const CubeTree& tree, int Q, int R, double M, double Lambda,
                                 double eps, int d, const BetaOptions& opt)
{
    AngleControl out;
    const Cube& q = tree.cube(Q);
    const Cube& r = tree.cube(R);
    const double lq = tree.ell(q), lr = tree.ell(r);
    const double dist = Q == R ? 0.0 : dist_cubes(tree, q, r);
    if (!(dist <= Lambda * std::max(lq, lr) &&
          std::max(lq, lr) <= Lambda * std::min(lq, lr)))
    {
        out.skipped = true;
        out.reason = "cubes are not Lambda-close";
        return out;
    }
    auto b1 = [&](const Cube& c) {
        return beta_dp(tree.cloud(), tree.ball(c).scaled(M), d, 1, std::nullopt, opt);
    };
    std::vector<int> anc;
    for (int a : {q.parent, r.parent})
        for (int t = a; t >= 0; t = tree.cube(t).parent)
            anc.push_back(t);
    std::sort(anc.begin(), anc.end());
    anc.erase(std::unique(anc.begin(), anc.end()), anc.end());
    for (int t : anc)
        out.sup_ancestor_beta = std::max(out.sup_ancestor_beta, b1(tree.cube(t)).value);
    BetaValue bq = b1(q);
    BetaValue br = Q == R ? bq : b1(r);
    out.beta_Q = bq.value;
    out.beta_R = br.value;
    out.sup_ancestor_beta = std::max({out.sup_ancestor_beta, bq.value, br.value});
    if (!(out.sup_ancestor_beta < eps))
    {
        out.skipped = true;
        out.reason = "an ancestor has beta >= eps";
        return out;
    }
    out.angle = plane_angle(bq.plane, br.plane);
    return out;
}

}  // namespace tstlab

#include "tstlab/dorronsoro.hpp"

#include "tstlab/beta.hpp"
#include "tstlab/parallel.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>

namespace tstlab {

namespace {

constexpr double kPi = 3.14159265358979323846;

double ball_volume(int d, double r)
{
    return std::pow(kPi, d / 2.0) / std::tgamma(d / 2.0 + 1) * std::pow(r, d);
}

struct Fit
{
    Matrix X;  // N x (d+1)
    Matrix Y;  // N x m
};

Fit gather(const SampledFunction& f, const std::vector<std::size_t>& idx)
{
    Fit F;
    const auto N = static_cast<Eigen::Index>(idx.size());
    F.X.resize(N, f.d + 1);
    F.Y.resize(N, f.m);
    for (Eigen::Index i = 0; i < N; ++i)
    {
        const auto j = static_cast<Eigen::Index>(idx[static_cast<std::size_t>(i)]);
        F.X.row(i).head(f.d) = f.x.col(j).transpose();
        F.X(i, f.d) = 1;
        F.Y.row(i) = f.f.col(j).transpose();
    }
    return F;
}

// theta: (d+1) x m, rows 0..d-1 are A^T, row d is b^T
Eigen::ArrayXd residual_norms(const Fit& F, const Matrix& theta)
{
    return (F.Y - F.X * theta).rowwise().norm().array();
}

double objective(const Eigen::ArrayXd& res, double p)
{
    if (std::isinf(p))
        return res.maxCoeff();
    return std::pow(res.pow(p).mean(), 1.0 / p);
}

Matrix weighted_ls(const Fit& F, const Eigen::ArrayXd& w)
{
    Eigen::ArrayXd s = w.sqrt();
    Matrix Xw = F.X.array().colwise() * s;
    Matrix Yw = F.Y.array().colwise() * s;
    return Xw.colPivHouseholderQr().solve(Yw);
}

// Coordinate pattern search with pairwise diagonals on the entries of theta.
void polish(const Fit& F, double p, Matrix& theta, double& best, double r)
{
    const Eigen::Index P = theta.size();
    const int d = static_cast<int>(F.X.cols()) - 1;
    Eigen::VectorXd scale(P);
    for (Eigen::Index k = 0; k < P; ++k)
        scale[k] = (k % theta.rows()) == d ? 1.0 : 1.0 / r;
    double step = 0.1 * std::max(best, 1e-300);
    auto eval = [&](const Matrix& t) { return objective(residual_norms(F, t), p); };
    for (int sweep = 0; sweep < 400 && step > 1e-13 * std::max(best, 1e-300); ++sweep)
    {
        bool improved = false;
        auto attempt = [&](const Matrix& t) {
            double v = eval(t);
            if (v < best)
            {
                best = v;
                theta = t;
                return true;
            }
            return false;
        };
        for (Eigen::Index k = 0; k < P && !improved; ++k)
            for (double sg : {1.0, -1.0})
            {
                Matrix t = theta;
                t.data()[k] += sg * step * scale[k];
                if (attempt(t))
                {
                    improved = true;
                    break;
                }
            }
        for (Eigen::Index k = 0; k < P && !improved; ++k)
            for (Eigen::Index l = k + 1; l < P && !improved; ++l)
                for (double sk : {1.0, -1.0})
                    for (double sl : {1.0, -1.0})
                    {
                        if (improved)
                            break;
                        Matrix t = theta;
                        t.data()[k] += sk * step * scale[k];
                        t.data()[l] += sl * step * scale[l];
                        improved = attempt(t);
                    }
        if (!improved)
            step *= 0.5;
    }
}

}  // namespace

SampledFunction SampledFunction::on_lattice(int d, int m, const Eigen::VectorXd& lo,
                                            const Eigen::VectorXd& hi, double pitch,
                                            const Fn& fn, const Eigen::VectorXd& support_lo,
                                            const Eigen::VectorXd& support_hi,
                                            std::optional<double> lipschitz)
{
    if (d < 1 || m < 1)
        throw InputError("SampledFunction: dimensions must be positive");
    if (lo.size() != d || hi.size() != d || support_lo.size() != d || support_hi.size() != d)
        throw InputError("SampledFunction: box dimension mismatch");
    if (!(pitch > 0))
        throw InputError("SampledFunction: pitch must be positive");
    SampledFunction s;
    s.d = d;
    s.m = m;
    s.pitch = pitch;
    s.lo = lo;
    s.support_lo = support_lo;
    s.support_hi = support_hi;
    s.lipschitz = lipschitz;
    long total = 1;
    for (int k = 0; k < d; ++k)
    {
        if (!(hi[k] >= lo[k]))
            throw InputError("SampledFunction: empty box");
        s.shape.push_back(static_cast<long>(std::floor((hi[k] - lo[k]) / pitch + 1e-9)) + 1);
        total *= s.shape.back();
    }
    s.x.resize(d, total);
    s.f.resize(m, total);
    std::vector<long> at(static_cast<std::size_t>(d), 0);
    for (long i = 0; i < total; ++i)
    {
        Eigen::VectorXd y(d);
        for (int k = 0; k < d; ++k)
            y[k] = lo[k] + pitch * static_cast<double>(at[static_cast<std::size_t>(k)]);
        s.x.col(i) = y;
        Eigen::VectorXd v = fn(y);
        if (v.size() != m)
            throw InputError("SampledFunction: value has wrong dimension");
        s.f.col(i) = v;
        for (int k = 0; k < d && ++at[static_cast<std::size_t>(k)] == s.shape[static_cast<std::size_t>(k)]; ++k)
            at[static_cast<std::size_t>(k)] = 0;
    }
    if (lipschitz && s.empirical_lipschitz() > *lipschitz * 1.01)
        throw InputError("SampledFunction: samples exceed the declared Lipschitz constant");
    return s;
}

double SampledFunction::empirical_lipschitz() const
{
    double L = 0;
    long stride = 1;
    const long N = static_cast<long>(size());
    for (int k = 0; k < d; ++k)
    {
        const long nk = shape[static_cast<std::size_t>(k)];
        for (long i = 0; i < N; ++i)
        {
            if ((i / stride) % nk == nk - 1)
                continue;
            L = std::max(L, (f.col(i) - f.col(i + stride)).norm() / pitch);
        }
        stride *= nk;
    }
    return L;
}

std::vector<std::size_t> SampledFunction::in_ball(const Ball& B) const
{
    if (B.center.size() != d)
        throw InputError("SampledFunction: ball dimension mismatch");
    std::vector<long> a(static_cast<std::size_t>(d)), b(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k)
    {
        const long nk = shape[static_cast<std::size_t>(k)];
        a[k] = std::max(0L, static_cast<long>(std::ceil((B.center[k] - B.radius - lo[k]) / pitch - 1e-9)));
        b[k] = std::min(nk - 1, static_cast<long>(std::floor((B.center[k] + B.radius - lo[k]) / pitch + 1e-9)));
        if (a[k] > b[k])
            return {};
    }
    std::vector<std::size_t> out;
    std::vector<long> at = a;
    const double r2 = B.radius * B.radius;
    for (;;)
    {
        long i = 0, stride = 1;
        for (int k = 0; k < d; ++k)
        {
            i += at[k] * stride;
            stride *= shape[static_cast<std::size_t>(k)];
        }
        if (sq_dist(x.col(i), B.center) <= r2)
            out.push_back(static_cast<std::size_t>(i));
        int k = 0;
        while (k < d && ++at[k] > b[k])
        {
            at[k] = a[k];
            ++k;
        }
        if (k == d)
            break;
    }
    std::sort(out.begin(), out.end());
    return out;
}

//---------------------------------------------------------------------------//

double omega_at(const SampledFunction& f, const Ball& B, double p, const Matrix& A,
                const Eigen::VectorXd& b)
{
    auto idx = f.in_ball(B);
    if (idx.empty())
        throw InputError("omega_at: no samples in B");
    Fit F = gather(f, idx);
    Matrix theta(f.d + 1, f.m);
    theta.topRows(f.d) = A.transpose();
    theta.row(f.d) = b.transpose();
    return objective(residual_norms(F, theta), p) / B.radius;
}

OmegaResult omega_p(const SampledFunction& f, const Ball& B, double p)
{
    if (!(p >= 1))
        throw InputError("omega_p: p must be >= 1");
    OmegaResult out;
    out.pitch = f.pitch;
    out.A = Matrix::Zero(f.m, f.d);
    out.b = Eigen::VectorXd::Zero(f.m);
    auto idx = f.in_ball(B);
    out.samples = idx.size();
    if (idx.size() < static_cast<std::size_t>(f.d + 1))
    {
        out.degenerate = true;
        return out;
    }
    Fit F = gather(f, idx);
    Eigen::ColPivHouseholderQR<Matrix> qr(F.X);
    if (qr.rank() < f.d + 1)
    {
        out.degenerate = true;
        return out;
    }
    Matrix theta = qr.solve(F.Y);
    Eigen::ArrayXd res = residual_norms(F, theta);
    double best = objective(res, p);
    if (p != 2 && best > 0)
    {
        const double floor = 1e-12 * std::max(res.maxCoeff(), 1e-300);
        Eigen::ArrayXd w = Eigen::ArrayXd::Constant(res.size(), 1.0 / static_cast<double>(res.size()));
        for (int it = 0; it < 300; ++it)
        {
            if (std::isinf(p))
            {
                // Lawson update
                w = w * res.max(floor);
                w /= w.sum();
            }
            else
                w = res.max(floor).pow(p - 2);
            Matrix t = weighted_ls(F, w);
            res = residual_norms(F, t);
            double v = objective(res, p);
            if (v < best)
            {
                double gain = best - v;
                best = v;
                theta = t;
                if (gain <= 1e-14 * best)
                    break;
            }
        }
        polish(F, p, theta, best, B.radius);
    }
    out.A = theta.topRows(f.d).transpose();
    out.b = theta.row(f.d).transpose();
    out.value = best / B.radius;
    return out;
}

OmegaReport omega_sum(const SampledFunction& f, double p, int depth, int threads)
{
    if (depth < 1)
        throw InputError("omega_sum: depth must be at least 1");
    OmegaReport rep;
    rep.p = p;
    rep.depth = depth;
    const int d = f.d;
    const double side0 = (f.support_hi - f.support_lo).maxCoeff();
    for (int j = 0; j <= depth; ++j)
    {
        const long per = 1L << j;
        long count = 1;
        for (int k = 0; k < d; ++k)
            count *= per;
        const double side = side0 / static_cast<double>(per);
        for (long c = 0; c < count; ++c)
        {
            OmegaCube q;
            q.level = j;
            q.side = side;
            q.center.resize(d);
            long rest = c;
            for (int k = 0; k < d; ++k)
            {
                q.center[k] = f.support_lo[k] + side * (static_cast<double>(rest % per) + 0.5);
                rest /= per;
            }
            rep.cubes.push_back(q);
        }
    }
    parallel_for(
        rep.cubes.size(),
        [&](std::size_t i) {
            OmegaCube& q = rep.cubes[i];
            Ball B(q.center, 3 * q.side * std::sqrt(static_cast<double>(d)));
            q.omega = omega_p(f, B, p).value;
        },
        threads);
    for (const auto& q : rep.cubes)
    {
        const double vol = std::pow(q.side, d);
        rep.sum_sq += q.omega * q.omega * vol;
        rep.sum_p += std::pow(q.omega, p) * vol;
    }
    const double L = f.lipschitz ? *f.lipschitz : f.empirical_lipschitz();
    rep.normalization = std::pow(f.support_diameter(), d) * L * L;
    return rep;
}

BoundPair omega_infty_bound_check(const SampledFunction& f, const Ball& B, double L)
{
    if (!(L >= 1))
        throw InputError("omega_infty_bound_check: L must be >= 1");
    auto idx = f.in_ball(B);
    // pairwise lower ratio on a thinned subset
    const std::size_t stride = std::max<std::size_t>(1, idx.size() / 1500);
    double lower = kInf;
    for (std::size_t a = 0; a < idx.size(); a += stride)
        for (std::size_t b = a + stride; b < idx.size(); b += stride)
        {
            const auto i = static_cast<Eigen::Index>(idx[a]), j = static_cast<Eigen::Index>(idx[b]);
            double dx = (f.x.col(i) - f.x.col(j)).norm();
            if (dx > 0)
                lower = std::min(lower, (f.f.col(i) - f.f.col(j)).norm() / dx);
        }
    if (lower < 1 / (2 * L))
        throw InputError("omega_infty_bound_check: samples are not bi-Lipschitz with constant L");
    BoundPair out;
    out.lhs = omega_p(f, B.scaled(0.5), kInf).value;
    out.rhs = std::pow(omega_p(f, B, 1).value, 1.0 / (f.d + 1));
    return out;
}

BoundPair beta_from_omega(const SampledFunction& f, const Point& x, double r, const Ball& B,
                          double p)
{
    if (x.size() != f.m)
        throw InputError("beta_from_omega: x must live in the codomain");
    if (f.m <= f.d)
        throw InputError("beta_from_omega: codomain dimension must exceed d");
    const double r2 = r * r;
    std::vector<std::size_t> in_image;
    for (std::size_t i = 0; i < f.size(); ++i)
    {
        const auto k = static_cast<Eigen::Index>(i);
        if (sq_dist(f.f.col(k), x) <= r2)
        {
            if (!B.contains(f.x.col(k)))
                throw InputError("beta_from_omega: B does not contain f^{-1}(Σ ∩ B(x,r))");
            in_image.push_back(i);
        }
    }
    if (in_image.empty())
        throw InputError("beta_from_omega: Σ ∩ B(x,r) is empty");
    OmegaResult om = omega_p(f, B, p);
    if (om.degenerate)
        throw InputError("beta_from_omega: degenerate sample set in B");
    PointCloud sigma(f.f);
    AffinePlane plane;
    try
    {
        plane = AffinePlane(om.b, om.A);
    }
    catch (const std::exception&)
    {
        throw InputError("beta_from_omega: witness map is not injective");
    }
    BoundPair out;
    out.lhs = beta_dp(sigma, Ball(x, r), f.d, p, plane).value;
    out.rhs = std::pow(ball_volume(f.d, B.radius) / std::pow(r, f.d), 1.0 / p) * om.value;
    return out;
}

}  // namespace tstlab

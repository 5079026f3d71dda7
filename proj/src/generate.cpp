#include "tstlab/generate.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace tstlab {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Fourier
{
    std::vector<double> amp, phase;
    double scale = 1;

    double value(double x) const
    {
        double s = 0;
        for (std::size_t k = 0; k < amp.size(); ++k)
            s += amp[k] * std::sin(2 * kPi * (k + 1) * x + phase[k]);
        return scale * s;
    }
    double slope(double x) const
    {
        double s = 0;
        for (std::size_t k = 0; k < amp.size(); ++k)
            s += amp[k] * 2 * kPi * (k + 1) * std::cos(2 * kPi * (k + 1) * x + phase[k]);
        return scale * s;
    }
};

// Random series with 1/k^2 amplitudes, rescaled so max |f'| = lambda.
Fourier make_fourier(const DatasetSpec& s)
{
    std::mt19937_64 rng(s.seed);
    std::uniform_real_distribution<double> u(-1, 1), ph(0, 2 * kPi);
    Fourier f;
    for (int k = 1; k <= s.modes; ++k)
    {
        f.amp.push_back(u(rng) / (k * k));
        f.phase.push_back(ph(rng));
    }
    // f' is 1-periodic, so one period bounds it everywhere
    const int G = 200000;
    double mx = 0;
    for (int i = 0; i < G; ++i)
        mx = std::max(mx, std::abs(f.slope(static_cast<double>(i) / G)));
    // grid max of a degree-`modes` trig polynomial is within (pi m / G)^2 / 2
    // relative of the true max
    const double slack = 1 + std::pow(kPi * s.modes / G, 2);
    f.scale = mx > 0 ? s.lambda / (mx * slack) : 0;
    return f;
}

Point zero_point(int n) { return Point::Zero(n); }

PointCloud finish(int n, const std::vector<Point>& pts, double h) { return PointCloud(n, pts, h); }

}  // namespace

const char* to_string(Family f)
{
    switch (f)
    {
    case Family::segment: return "segment";
    case Family::circle: return "circle";
    case Family::lipschitz_graph: return "lipschitz_graph";
    case Family::koch: return "koch";
    case Family::cantor4: return "cantor4";
    case Family::perturbed_plane: return "perturbed_plane";
    }
    return "?";
}

Family family_from_string(const std::string& s)
{
    for (Family f : {Family::segment, Family::circle, Family::lipschitz_graph, Family::koch,
                     Family::cantor4, Family::perturbed_plane})
        if (s == to_string(f))
            return f;
    throw InputError("unknown dataset family '" + s + "'");
}

void DatasetSpec::validate() const
{
    if (n < 1 || n > 4096)
        throw InputError("n must lie in [1, 4096]");
    if (count < 2 && family != Family::cantor4)
        throw InputError("count must be at least 2");
    if (!(hi > lo))
        throw InputError("domain must satisfy lo < hi");
    switch (family)
    {
    case Family::segment:
        if (n < 1)
            throw InputError("segment needs n >= 1");
        break;
    case Family::circle:
    case Family::koch:
    case Family::cantor4:
    case Family::lipschitz_graph:
        if (n < 2)
            throw InputError(std::string(to_string(family)) + " needs n >= 2");
        break;
    case Family::perturbed_plane:
        if (d < 1 || d >= n)
            throw InputError("perturbed_plane needs 1 <= d < n");
        break;
    }
    if (family == Family::lipschitz_graph && !(lambda >= 0 && lambda <= 10))
        throw InputError("lambda must lie in [0, 10]");
    if (family == Family::lipschitz_graph && (modes < 1 || modes > 1024))
        throw InputError("modes must lie in [1, 1024]");
    if (family == Family::koch && !(angle > 0 && angle < 90))
        throw InputError("Koch angle must lie in (0, 90) degrees");
    if ((family == Family::koch || family == Family::cantor4) && (depth < 0 || depth > 12))
        throw InputError("depth must lie in [0, 12]");
    if (family == Family::perturbed_plane && !(noise >= 0 && std::isfinite(noise)))
        throw InputError("noise must be finite and nonnegative");
}

double graph_lipschitz(const DatasetSpec& spec)
{
    Fourier f = make_fourier(spec);
    double mx = 0;
    const int G = 200000;
    for (int i = 0; i < G; ++i)
        mx = std::max(mx, std::abs(f.slope(static_cast<double>(i) / G)));
    return mx;
}

double koch_step_growth(double angle_deg)
{
    return 2.0 / (1 + std::cos(angle_deg * kPi / 180));
}

double koch_dimension(double angle_deg)
{
    return std::log(4.0) / std::log(2 * (1 + std::cos(angle_deg * kPi / 180)));
}

PointCloud generate(const DatasetSpec& s)
{
    s.validate();
    const int n = s.n;
    std::vector<Point> pts;
    switch (s.family)
    {
    case Family::segment:
    {
        const double h = (s.hi - s.lo) / static_cast<double>(s.count - 1);
        for (std::size_t i = 0; i < s.count; ++i)
        {
            Point p = zero_point(n);
            p[0] = s.lo + h * static_cast<double>(i);
            pts.push_back(p);
        }
        return finish(n, pts, h);
    }
    case Family::circle:
    {
        const double step = 2 * kPi / static_cast<double>(s.count);
        for (std::size_t i = 0; i < s.count; ++i)
        {
            Point p = zero_point(n);
            p[0] = std::cos(step * static_cast<double>(i));
            p[1] = std::sin(step * static_cast<double>(i));
            pts.push_back(p);
        }
        return finish(n, pts, 2 * std::sin(step / 2));
    }
    case Family::lipschitz_graph:
    {
        Fourier f = make_fourier(s);
        const double h = (s.hi - s.lo) / static_cast<double>(s.count - 1);
        for (std::size_t i = 0; i < s.count; ++i)
        {
            Point p = zero_point(n);
            p[0] = s.lo + h * static_cast<double>(i);
            p[1] = f.value(p[0]);
            pts.push_back(p);
        }
        return finish(n, pts, h * std::sqrt(1 + s.lambda * s.lambda));
    }
    case Family::koch:
    {
        const double a = s.angle * kPi / 180;
        const double r = 1 / (2 * (1 + std::cos(a)));
        // vertices of the depth-m polygon in the plane
        std::vector<Eigen::Vector2d> v{{0, 0}, {1, 0}};
        for (int it = 0; it < s.depth; ++it)
        {
            std::vector<Eigen::Vector2d> w;
            for (std::size_t i = 0; i + 1 < v.size(); ++i)
            {
                Eigen::Vector2d p = v[i], q = v[i + 1], e = q - p;
                Eigen::Vector2d u = e * r;
                Eigen::Vector2d rot(std::cos(a) * u[0] - std::sin(a) * u[1],
                                    std::sin(a) * u[0] + std::cos(a) * u[1]);
                Eigen::Vector2d a1 = p + u, a2 = a1 + rot, a3 = q - u;
                w.push_back(p);
                w.push_back(a1);
                w.push_back(a2);
                w.push_back(a3);
            }
            w.push_back(v.back());
            v = std::move(w);
        }
        const std::size_t segs = v.size() - 1;
        const std::size_t per = std::max<std::size_t>(1, s.count / segs);
        double h = 0;
        for (std::size_t i = 0; i < segs; ++i)
        {
            Eigen::Vector2d e = v[i + 1] - v[i];
            h = std::max(h, e.norm() / static_cast<double>(per));
            for (std::size_t j = 0; j < per; ++j)
            {
                Eigen::Vector2d q = v[i] + e * (static_cast<double>(j) / per);
                Point p = zero_point(n);
                p[0] = q[0];
                p[1] = q[1];
                pts.push_back(p);
            }
        }
        Point p = zero_point(n);
        p[0] = v.back()[0];
        p[1] = v.back()[1];
        pts.push_back(p);
        return finish(n, pts, h);
    }
    case Family::cantor4:
    {
        std::vector<Eigen::Vector2d> c{{0.5, 0.5}};
        double side = 1;
        for (int it = 0; it < s.depth; ++it)
        {
            std::vector<Eigen::Vector2d> w;
            const double off = 1.5 * side / 4;
            for (const auto& q : c)
                for (double dy : {-off, off})
                    for (double dx : {-off, off})
                        w.emplace_back(q[0] + dx, q[1] + dy);
            c = std::move(w);
            side /= 4;
        }
        for (const auto& q : c)
        {
            Point p = zero_point(n);
            p[0] = q[0];
            p[1] = q[1];
            pts.push_back(p);
        }
        return finish(n, pts, s.depth == 0 ? 0.0 : side);
    }
    case Family::perturbed_plane:
    {
        const int d = s.d;
        const auto side = static_cast<std::size_t>(
            std::max(2.0, std::round(std::pow(static_cast<double>(s.count), 1.0 / d))));
        const double h = (s.hi - s.lo) / static_cast<double>(side - 1);
        std::mt19937_64 rng(s.seed);
        std::uniform_real_distribution<double> u(-s.noise, s.noise);
        std::vector<std::size_t> idx(d, 0);
        for (;;)
        {
            Point p = zero_point(n);
            for (int k = 0; k < d; ++k)
                p[k] = s.lo + h * static_cast<double>(idx[k]);
            p[d] = u(rng);
            pts.push_back(p);
            int k = 0;
            while (k < d && ++idx[k] == side)
                idx[k++] = 0;
            if (k == d)
                break;
        }
        return finish(n, pts, h);
    }
    }
    throw InputError("unknown family");
}

}  // namespace tstlab

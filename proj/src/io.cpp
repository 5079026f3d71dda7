#include "tstlab/io.hpp"

#include <algorithm>
#include <cmath>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace tstlab {

static_assert(std::endian::native == std::endian::little, "binary cloud I/O assumes little-endian");

void write_cloud_csv(std::ostream& os, const PointCloud& E)
{
    os << std::setprecision(17);
    os << "# resolution " << E.resolution() << '\n';
    const Matrix& P = E.points();
    for (Eigen::Index i = 0; i < P.cols(); ++i)
    {
        for (Eigen::Index a = 0; a < P.rows(); ++a)
            os << (a ? "," : "") << P(a, i);
        os << '\n';
    }
}

PointCloud read_cloud_csv(std::istream& is)
{
    std::vector<std::vector<double>> rows;
    double resolution = -1;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line))
    {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        if (line[0] == '#')
        {
            std::istringstream hs(line.substr(1));
            std::string key;
            double v;
            if (hs >> key >> v && key == "resolution")
                resolution = v;
            continue;
        }
        std::vector<double> row;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ','))
        {
            try
            {
                std::size_t used = 0;
                row.push_back(std::stod(cell, &used));
                if (cell.find_first_not_of(" \t", used) != std::string::npos)
                    throw std::invalid_argument("trailing");
            }
            catch (const std::exception&)
            {
                throw InputError("cloud CSV line " + std::to_string(lineno) + ": bad number '" + cell + "'");
            }
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw InputError("cloud CSV line " + std::to_string(lineno) + ": inconsistent column count");
        rows.push_back(std::move(row));
    }
    if (rows.empty())
        throw InputError("cloud CSV: no points");
    Matrix m(static_cast<Eigen::Index>(rows.front().size()), static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t a = 0; a < rows[i].size(); ++a)
            m(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(i)) = rows[i][a];
    return PointCloud(std::move(m), resolution);
}

void write_cloud_binary(std::ostream& os, const PointCloud& E)
{
    const Matrix& P = E.points();
    os.write("TSTL", 4);
    std::uint32_t n = static_cast<std::uint32_t>(P.rows());
    std::uint64_t count = static_cast<std::uint64_t>(P.cols());
    os.write(reinterpret_cast<const char*>(&n), sizeof n);
    os.write(reinterpret_cast<const char*>(&count), sizeof count);
    // Eigen is column-major, so each point's coordinates are contiguous
    os.write(reinterpret_cast<const char*>(P.data()),
             static_cast<std::streamsize>(sizeof(double) * n * count));
}

PointCloud read_cloud_binary(std::istream& is)
{
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, "TSTL", 4) != 0)
        throw InputError("binary cloud: bad magic");
    std::uint32_t n = 0;
    std::uint64_t count = 0;
    if (!is.read(reinterpret_cast<char*>(&n), sizeof n) || !is.read(reinterpret_cast<char*>(&count), sizeof count))
        throw InputError("binary cloud: truncated header");
    if (n == 0)
        throw InputError("binary cloud: zero dimension");
    Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(count));
    if (!is.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * n * count)))
        throw InputError("binary cloud: truncated data");
    return PointCloud(std::move(m));
}

void save_cloud(const std::filesystem::path& path, const PointCloud& E)
{
    auto ext = path.extension().string();
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw InputError("cannot open " + path.string() + " for writing");
    if (ext == ".bin" || ext == ".tstl")
        write_cloud_binary(os, E);
    else
        write_cloud_csv(os, E);
    if (!os)
        throw InputError("write failed: " + path.string());
}

PointCloud load_cloud(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw InputError("cannot open " + path.string());
    char magic[4] = {};
    is.read(magic, 4);
    bool binary = is.gcount() == 4 && std::memcmp(magic, "TSTL", 4) == 0;
    is.clear();
    is.seekg(0);
    return binary ? read_cloud_binary(is) : read_cloud_csv(is);
}

SampledFunction read_sampled_function(std::istream& is, int d)
{
    if (d < 1)
        throw InputError("sampled function: d must be positive");
    PointCloud raw = read_cloud_csv(is);
    const Matrix& P = raw.points();
    const int cols = static_cast<int>(P.rows());
    if (cols <= d)
        throw InputError("sampled function: need d coordinate columns and at least one value column");
    const int m = cols - d;
    SampledFunction s;
    s.d = d;
    s.m = m;
    s.x = P.topRows(d);
    s.f = P.bottomRows(m);
    s.lo = s.x.rowwise().minCoeff();
    const long N = static_cast<long>(P.cols());
    long stride = 1;
    s.pitch = 0;
    for (int a = 0; a < d; ++a)
    {
        std::vector<double> v;
        v.reserve(static_cast<std::size_t>(N));
        for (long i = 0; i < N; ++i)
            v.push_back(s.x(a, i));
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        s.shape.push_back(static_cast<long>(v.size()));
        if (v.size() > 1 && s.pitch == 0)
            s.pitch = v[1] - v[0];
        stride *= static_cast<long>(v.size());
    }
    if (stride != N || !(s.pitch > 0))
        throw InputError("sampled function: samples do not form a full lattice");
    std::vector<long> at(static_cast<std::size_t>(d), 0);
    for (long i = 0; i < N; ++i)
    {
        for (int a = 0; a < d; ++a)
        {
            double expect = s.lo[a] + s.pitch * static_cast<double>(at[static_cast<std::size_t>(a)]);
            if (std::abs(s.x(a, i) - expect) > 1e-6 * s.pitch)
                throw InputError("sampled function: row " + std::to_string(i + 1) +
                                 " breaks the lattice order (axis 0 fastest, common pitch)");
        }
        for (int a = 0; a < d && ++at[static_cast<std::size_t>(a)] == s.shape[static_cast<std::size_t>(a)]; ++a)
            at[static_cast<std::size_t>(a)] = 0;
    }
    s.support_lo = Eigen::VectorXd::Constant(d, kInf);
    s.support_hi = Eigen::VectorXd::Constant(d, -kInf);
    for (long i = 0; i < N; ++i)
        if (s.f.col(i).squaredNorm() > 0)
        {
            s.support_lo = s.support_lo.cwiseMin(s.x.col(i));
            s.support_hi = s.support_hi.cwiseMax(s.x.col(i));
        }
    if (!std::isfinite(s.support_lo[0]))
        throw InputError("sampled function: identically zero");
    return s;
}

nlohmann::json to_json(const AffinePlane& P)
{
    nlohmann::json j;
    j["base"] = std::vector<double>(P.base().data(), P.base().data() + P.base().size());
    nlohmann::json fr = nlohmann::json::array();
    for (int a = 0; a < P.dim(); ++a)
    {
        Eigen::VectorXd col = P.frame().col(a);
        fr.push_back(std::vector<double>(col.data(), col.data() + col.size()));
    }
    j["frame"] = fr;
    return j;
}

namespace {

Eigen::VectorXd vec(const nlohmann::json& j)
{
    auto v = j.get<std::vector<double>>();
    return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

AffinePlane plane_from_json(const nlohmann::json& j)
{
    Eigen::VectorXd base = vec(j.at("base"));
    const auto& fr = j.at("frame");
    Matrix span(base.size(), static_cast<Eigen::Index>(fr.size()));
    for (std::size_t a = 0; a < fr.size(); ++a)
    {
        Eigen::VectorXd col = vec(fr[a]);
        if (col.size() != base.size())
            throw InputError("plane JSON: frame vector has wrong dimension");
        span.col(static_cast<Eigen::Index>(a)) = col;
    }
    return AffinePlane(base, span);
}

nlohmann::json to_json(const CCBP& c)
{
    nlohmann::json j;
    j["P0"] = to_json(c.P0);
    j["layers"] = nlohmann::json::array();
    for (const auto& L : c.layers)
    {
        nlohmann::json l;
        l["centers"] = nlohmann::json::array();
        l["planes"] = nlohmann::json::array();
        for (std::size_t i = 0; i < L.centers.size(); ++i)
        {
            l["centers"].push_back(std::vector<double>(L.centers[i].data(), L.centers[i].data() + L.centers[i].size()));
            l["planes"].push_back(to_json(L.planes[i]));
        }
        j["layers"].push_back(l);
    }
    return j;
}

CCBP ccbp_from_json(const nlohmann::json& j)
{
    try
    {
        CCBP c;
        c.P0 = plane_from_json(j.at("P0"));
        for (const auto& l : j.at("layers"))
        {
            CcbpLayer L;
            for (const auto& x : l.at("centers"))
                L.centers.push_back(vec(x));
            for (const auto& p : l.at("planes"))
                L.planes.push_back(plane_from_json(p));
            c.layers.push_back(std::move(L));
        }
        return c;
    }
    catch (const nlohmann::json::exception& e)
    {
        throw InputError(std::string("CCBP JSON: ") + e.what());
    }
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw InputError("cannot open " + path.string() + " for writing");
    os << text;
    if (!os)
        throw InputError("write failed: " + path.string());
}

std::string read_text(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw InputError("cannot open " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace tstlab

#include "tstlab/experiment.hpp"

#include "tstlab/content.hpp"
#include "tstlab/io.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <memory>
#include <sstream>

namespace tstlab {

using nlohmann::json;

namespace {

template<class T>
void read_opt(const json& j, const char* key, T& out)
{
    if (j.contains(key) && !j.at(key).is_null())
        out = j.at(key).get<T>();
}

void read_ceiling(const json& j, const char* key, std::optional<double>& out)
{
    if (!j.contains(key))
        return;
    if (j.at(key).is_null())
        out.reset();
    else
        out = j.at(key).get<double>();
}

json opt_json(const std::optional<double>& v)
{
    return v ? json(*v) : json(nullptr);
}

double safe_div(double a, double b)
{
    return b > 0 ? a / b : 0;
}

}  // namespace

DatasetSpec dataset_from_json(const json& j, DatasetSpec s)
{
    try
    {
        if (j.contains("family"))
            s.family = family_from_string(j.at("family").get<std::string>());
        read_opt(j, "n", s.n);
        read_opt(j, "d", s.d);
        read_opt(j, "lambda", s.lambda);
        read_opt(j, "angle", s.angle);
        read_opt(j, "depth", s.depth);
        read_opt(j, "noise", s.noise);
        read_opt(j, "lo", s.lo);
        read_opt(j, "hi", s.hi);
        read_opt(j, "modes", s.modes);
        read_opt(j, "seed", s.seed);
        read_opt(j, "count", s.count);
    }
    catch (const json::exception& e)
    {
        throw InputError(std::string("dataset JSON: ") + e.what());
    }
    return s;
}

json to_json(const DatasetSpec& s)
{
    return json{{"family", to_string(s.family)}, {"n", s.n},         {"d", s.d},         {"lambda", s.lambda},
                {"angle", s.angle},             {"depth", s.depth}, {"noise", s.noise}, {"lo", s.lo},
                {"hi", s.hi},                   {"modes", s.modes}, {"seed", s.seed},   {"count", s.count}};
}

ExperimentConfig config_from_json(const json& j)
{
    ExperimentConfig c;
    try
    {
        read_opt(j, "name", c.name);
        if (j.contains("dataset"))
            c.dataset = dataset_from_json(j.at("dataset"));
        if (j.contains("tree"))
        {
            const auto& t = j.at("tree");
            read_opt(t, "rho", c.rho);
            read_opt(t, "c0", c.c0);
            read_opt(t, "scale0", c.scale0);
            read_opt(t, "root_level", c.root_level);
            read_opt(t, "depth", c.depth);
        }
        if (j.contains("beta"))
        {
            const auto& b = j.at("beta");
            read_opt(b, "d", c.tst.d);
            read_opt(b, "p", c.tst.p);
            read_opt(b, "C0", c.tst.C0);
            read_opt(b, "max_points", c.tst.beta.max_points);
        }
        if (j.contains("bwgl"))
        {
            const auto& b = j.at("bwgl");
            read_opt(b, "A", c.tst.A);
            read_opt(b, "eps", c.tst.eps);
        }
        if (j.contains("ceilings"))
        {
            const auto& k = j.at("ceilings");
            read_ceiling(k, "two_sided", c.ceilings.two_sided);
            read_ceiling(k, "thm15", c.ceilings.thm15);
            read_ceiling(k, "thm16", c.ceilings.thm16);
            read_ceiling(k, "bwgl_max", c.ceilings.bwgl_max);
            read_ceiling(k, "stability", c.ceilings.stability);
            read_opt(k, "stability_from", c.ceilings.stability_from);
            read_opt(k, "stability_to", c.ceilings.stability_to);
        }
    }
    catch (const json::exception& e)
    {
        throw InputError(std::string("experiment JSON: ") + e.what());
    }
    c.tst.depth = c.depth;
    return c;
}

json to_json(const ExperimentConfig& c)
{
    return json{
        {"name", c.name},
        {"dataset", to_json(c.dataset)},
        {"tree",
         {{"rho", c.rho}, {"c0", c.c0}, {"scale0", c.scale0}, {"root_level", c.root_level}, {"depth", c.depth}}},
        {"beta", {{"d", c.tst.d}, {"p", c.tst.p}, {"C0", c.tst.C0}, {"max_points", c.tst.beta.max_points}}},
        {"bwgl", {{"A", c.tst.A}, {"eps", c.tst.eps}}},
        {"ceilings",
         {{"two_sided", opt_json(c.ceilings.two_sided)},
          {"thm15", opt_json(c.ceilings.thm15)},
          {"thm16", opt_json(c.ceilings.thm16)},
          {"bwgl_max", opt_json(c.ceilings.bwgl_max)},
          {"stability", opt_json(c.ceilings.stability)},
          {"stability_from", c.ceilings.stability_from},
          {"stability_to", c.ceilings.stability_to}}},
    };
}

std::vector<std::string> ExperimentConfig::validate() const
{
    dataset.validate();
    if (!(rho > 0 && rho < 1))
        throw InputError("rho must lie in (0, 1)");
    if (root_level < 0 || depth < 0)
        throw InputError("root_level and depth must be nonnegative");
    if (!(tst.p >= 1 && tst.p < critical_exponent(tst.d)))
        throw InputError("p must satisfy 1 <= p < p(d)");
    if (!(tst.C0 > 1))
        throw InputError("C0 must exceed 1");
    if (!(tst.A > 1))
        throw InputError("A must exceed 1");
    std::vector<std::string> w;
    if (tst.A < 1e5)
    {
        std::ostringstream os;
        os << "WARNING: A = " << tst.A << " is below the theoretical floor 1e5";
        w.push_back(os.str());
    }
    return w;
}

bool ExperimentResult::pass() const
{
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

int root_cube(const CubeTree& tree, int level)
{
    if (level < 0 || level > tree.depth())
        throw InputError("root level " + std::to_string(level) + " outside the tree");
    const Matrix& P = tree.cloud().points();
    Eigen::VectorXd center = 0.5 * (P.rowwise().minCoeff() + P.rowwise().maxCoeff());
    Eigen::Index best = 0;
    (P.colwise() - center).colwise().squaredNorm().minCoeff(&best);
    return tree.cube_of(static_cast<std::size_t>(best), level);
}

std::vector<RatioRow> ratio_rows(const TSTReport& rep)
{
    std::vector<RatioRow> rows;
    for (const auto& p : rep.partials)
    {
        RatioRow r;
        r.depth = p.depth;
        r.tst_sum = p.tst_sum;
        r.bwgl_sum = p.bwgl_sum;
        r.measure = p.measure_estimate;
        r.two_sided = safe_div(p.tst_sum + p.bwgl_sum, p.measure_estimate + p.bwgl_sum);
        r.thm15 = safe_div(p.tst_sum, p.measure_estimate + p.bwgl_sum);
        r.thm16 = safe_div(p.measure_estimate + p.bwgl_sum, p.tst_sum);
        rows.push_back(r);
    }
    return rows;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg)
{
    ExperimentResult r;
    r.config = cfg;
    r.warnings = cfg.validate();
    std::shared_ptr<const PointCloud> E;
    try
    {
        E = std::make_shared<const PointCloud>(generate(cfg.dataset));
    }
    catch (const std::exception& e)
    {
        throw InputError(std::string("dataset generation failed: ") + e.what());
    }
    r.cloud_size = E->size();
    r.resolution = E->resolution();
    CubeTree tree;
    try
    {
        tree = build_cubes(build_nets(E, cfg.rho, cfg.root_level + cfg.depth, cfg.scale0), cfg.c0);
    }
    catch (const std::exception& e)
    {
        throw std::runtime_error(std::string("cube construction failed: ") + e.what());
    }
    r.root = root_cube(tree, std::min(cfg.root_level, tree.depth()));
    TstParams tp = cfg.tst;
    tp.depth = cfg.depth;
    r.report = tst_report(tree, r.root, tp);
    r.rows = ratio_rows(r.report);

    const auto& C = cfg.ceilings;
    const RatioRow& last = r.rows.back();
    auto band = [&](const std::string& name, double v, double bound) {
        r.checks.push_back(Check{name, v, 1 / bound, bound, v >= 1 / bound && v <= bound});
    };
    if (C.two_sided)
        band("two_sided", last.two_sided, *C.two_sided);
    if (C.thm15)
        r.checks.push_back(Check{"thm15", last.thm15, 0, *C.thm15, last.thm15 <= *C.thm15});
    if (C.thm16)
        r.checks.push_back(Check{"thm16", last.thm16, 0, *C.thm16, last.thm16 <= *C.thm16});
    if (C.bwgl_max)
        r.checks.push_back(Check{"bwgl_sum", last.bwgl_sum, 0, *C.bwgl_max, last.bwgl_sum <= *C.bwgl_max});
    if (C.stability)
    {
        const int a = C.stability_from, b = C.stability_to;
        if (a < 0 || b >= static_cast<int>(r.rows.size()) || a >= b)
            r.checks.push_back(Check{"stability", 0, 0, *C.stability, false});
        else
        {
            double v = std::abs(safe_div(r.rows[b].two_sided, r.rows[a].two_sided) - 1);
            r.checks.push_back(Check{"stability", v, 0, *C.stability, v <= *C.stability});
        }
    }
    return r;
}

json ExperimentResult::summary() const
{
    json j;
    j["schema"] = kSummarySchema;
    j["config"] = to_json(config);
    j["cloud"] = {{"size", cloud_size}, {"resolution", resolution}};
    j["root"] = {{"id", root}, {"level", report.root_level}, {"K", report.K}, {"ell_d", report.ell_root_d}};
    j["totals"] = {{"tst_sum", report.tst_sum},
                   {"bwgl_sum", report.bwgl_sum},
                   {"measure_estimate", report.measure_estimate},
                   {"cubes", report.cubes.size()}};
    json rows = json::array();
    for (const auto& r : this->rows)
        rows.push_back({{"depth", r.depth},
                        {"tst_sum", r.tst_sum},
                        {"bwgl_sum", r.bwgl_sum},
                        {"measure", r.measure},
                        {"two_sided", r.two_sided},
                        {"thm15", r.thm15},
                        {"thm16", r.thm16}});
    j["depths"] = rows;
    json checks_j = json::array();
    for (const auto& c : checks)
        checks_j.push_back({{"name", c.name}, {"value", c.value}, {"lo", c.lo}, {"hi", c.hi}, {"pass", c.pass}});
    j["checks"] = checks_j;
    j["pass"] = pass();
    std::vector<std::string> w = warnings;
    for (const auto& s : report.warnings)
        if (std::find(w.begin(), w.end(), s) == w.end())
            w.push_back(s);
    j["warnings"] = w;
    return j;
}

std::string ExperimentResult::cubes_csv() const
{
    std::ostringstream os;
    os << std::setprecision(17);
    os << "level,id,beta,bwgl_flag,ell_d\n";
    for (const auto& c : report.cubes)
        os << c.level << ',' << c.id << ',' << c.beta << ',' << (c.bwgl ? 1 : 0) << ',' << c.ell_d << '\n';
    return os.str();
}

void write_bundle(const ExperimentResult& r, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    write_text(dir / "summary.json", r.summary().dump(2) + "\n");
    write_text(dir / "cubes.csv", r.cubes_csv());
}

namespace {

struct CubeRow
{
    int level;
    double beta;
};

std::vector<CubeRow> read_cubes_csv(const std::filesystem::path& p)
{
    std::istringstream is(read_text(p));
    std::string line;
    if (!std::getline(is, line) || line != "level,id,beta,bwgl_flag,ell_d")
        throw InputError(p.string() + ": unexpected header");
    std::vector<CubeRow> rows;
    while (std::getline(is, line))
    {
        if (line.empty())
            continue;
        std::istringstream ls(line);
        std::string a, b, c;
        std::getline(ls, a, ',');
        std::getline(ls, b, ',');
        std::getline(ls, c, ',');
        try
        {
            rows.push_back(CubeRow{std::stoi(a), std::stod(c)});
        }
        catch (const std::exception&)
        {
            throw InputError(p.string() + ": bad row '" + line + "'");
        }
    }
    return rows;
}

}  // namespace

void write_report(const std::vector<std::filesystem::path>& bundles, const std::filesystem::path& out)
{
    constexpr int bins = 20;
    std::ostringstream hist, ratio;
    hist << std::setprecision(17);
    ratio << std::setprecision(17);
    hist << "run,level,bin,bin_lo,bin_hi,count\n";
    ratio << "run,depth,tst_sum,bwgl_sum,measure,two_sided,thm15,thm16\n";
    for (const auto& dir : bundles)
    {
        if (!std::filesystem::exists(dir / "summary.json") || !std::filesystem::exists(dir / "cubes.csv"))
            throw InputError("missing experiment bundle in " + dir.string());
        json s;
        try
        {
            s = json::parse(read_text(dir / "summary.json"));
        }
        catch (const json::exception& e)
        {
            throw InputError(dir.string() + "/summary.json: " + e.what());
        }
        std::string run = s.at("config").value("name", dir.filename().string());
        std::map<int, std::vector<long>> counts;
        for (const auto& row : read_cubes_csv(dir / "cubes.csv"))
        {
            auto& c = counts[row.level];
            c.resize(bins, 0);
            int b = static_cast<int>(std::floor(row.beta * bins));
            ++c[static_cast<std::size_t>(std::clamp(b, 0, bins - 1))];
        }
        for (const auto& [level, c] : counts)
            for (int b = 0; b < bins; ++b)
                hist << run << ',' << level << ',' << b << ',' << static_cast<double>(b) / bins << ','
                     << static_cast<double>(b + 1) / bins << ',' << c[static_cast<std::size_t>(b)] << '\n';
        for (const auto& r : s.at("depths"))
            ratio << run << ',' << r.at("depth").get<int>() << ',' << r.at("tst_sum").get<double>() << ','
                  << r.at("bwgl_sum").get<double>() << ',' << r.at("measure").get<double>() << ','
                  << r.at("two_sided").get<double>() << ',' << r.at("thm15").get<double>() << ','
                  << r.at("thm16").get<double>() << '\n';
    }
    std::filesystem::create_directories(out);
    write_text(out / "beta_histogram.csv", hist.str());
    write_text(out / "ratio_vs_depth.csv", ratio.str());
}

}  // namespace tstlab

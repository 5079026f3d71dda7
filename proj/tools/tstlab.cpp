#include "tstlab/beta.hpp"
#include "tstlab/content.hpp"
#include "tstlab/cubes.hpp"
#include "tstlab/dorronsoro.hpp"
#include "tstlab/experiment.hpp"
#include "tstlab/generate.hpp"
#include "tstlab/io.hpp"
#include "tstlab/reifenberg.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

using namespace tstlab;
using nlohmann::json;

namespace {

struct Global
{
    std::string config;
    std::optional<std::uint64_t> seed;
};

json load_config(const Global& g)
{
    if (g.config.empty())
        return json::object();
    try
    {
        return json::parse(read_text(g.config));
    }
    catch (const json::exception& e)
    {
        throw InputError(g.config + ": " + e.what());
    }
}

Point parse_point(const std::string& s)
{
    std::vector<double> v;
    std::istringstream is(s);
    std::string cell;
    while (std::getline(is, cell, ','))
        v.push_back(std::stod(cell));
    if (v.empty())
        throw InputError("empty point '" + s + "'");
    return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void emit(const json& j, const std::string& out)
{
    if (out.empty() || out == "-")
        std::cout << j.dump(2) << "\n";
    else
        write_text(out, j.dump(2) + "\n");
}

json tst_json(const TSTReport& r)
{
    json j;
    j["schema"] = "tstlab.tst/1";
    j["root"] = r.root;
    j["root_level"] = r.root_level;
    j["K"] = r.K;
    j["ell_root_d"] = r.ell_root_d;
    j["tst_sum"] = r.tst_sum;
    j["bwgl_sum"] = r.bwgl_sum;
    j["measure_estimate"] = r.measure_estimate;
    json rows = json::array();
    for (const auto& row : ratio_rows(r))
        rows.push_back({{"depth", row.depth},
                        {"tst_sum", row.tst_sum},
                        {"bwgl_sum", row.bwgl_sum},
                        {"measure", row.measure},
                        {"two_sided", row.two_sided}});
    j["depths"] = rows;
    j["warnings"] = r.warnings;
    return j;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"tstlab: multiscale flatness, cubes, TST sums and Reifenberg iteration on point clouds"};
    app.require_subcommand(1);
    Global g;
    std::uint64_t seed_value = 0;
    app.add_option("--config", g.config, "JSON configuration file");
    auto* seed_opt = app.add_option("--seed", seed_value, "random seed (overrides the config)");

    // generate
    auto* gen = app.add_subcommand("generate", "synthesize a point cloud");
    std::string gen_family, gen_out = "cloud.csv";
    DatasetSpec gspec;
    gen->add_option("--family", gen_family, "segment|circle|lipschitz_graph|koch|cantor4|perturbed_plane");
    std::vector<std::pair<std::string, CLI::Option*>> gen_fields = {
        {"n", gen->add_option("--n", gspec.n, "ambient dimension")},
        {"d", gen->add_option("--d", gspec.d, "plane dimension (perturbed_plane)")},
        {"lambda", gen->add_option("--lambda", gspec.lambda, "Lipschitz constant")},
        {"angle", gen->add_option("--angle", gspec.angle, "Koch angle in degrees")},
        {"depth", gen->add_option("--depth", gspec.depth, "Koch / Cantor depth")},
        {"noise", gen->add_option("--noise", gspec.noise, "perturbed_plane amplitude")},
        {"lo", gen->add_option("--lo", gspec.lo, "domain lower end")},
        {"hi", gen->add_option("--hi", gspec.hi, "domain upper end")},
        {"count", gen->add_option("--count", gspec.count, "target sample count")},
    };
    gen->add_option("-o,--out", gen_out, "output (.csv, or .bin/.tstl for binary)");

    // cubes
    auto* cub = app.add_subcommand("cubes", "build nets and cubes, write the tree");
    std::string cub_in, cub_out;
    double cub_rho = 0.5, cub_c0 = 1.0 / 30;
    int cub_k = 6;
    cub->add_option("-i,--input", cub_in, "point cloud")->required();
    cub->add_option("--rho", cub_rho);
    cub->add_option("--c0", cub_c0);
    cub->add_option("--kmax", cub_k, "finest level");
    cub->add_option("-o,--out", cub_out, "output (stdout if empty)");

    // content
    auto* con = app.add_subcommand("content", "Hausdorff content estimate in a ball");
    std::string con_in, con_center;
    double con_d = 1, con_r = 1;
    con->add_option("-i,--input", con_in)->required();
    con->add_option("--d", con_d);
    con->add_option("--center", con_center, "comma-separated coordinates")->required();
    con->add_option("--radius", con_r);

    // beta
    auto* bet = app.add_subcommand("beta", "one β-number in one ball");
    std::string bet_in, bet_center, bet_kind = "dp";
    int bet_d = 1;
    double bet_p = 2, bet_r = 1;
    bet->add_option("-i,--input", bet_in)->required();
    bet->add_option("--kind", bet_kind, "inf|dp|bbeta");
    bet->add_option("--d", bet_d);
    bet->add_option("--p", bet_p);
    bet->add_option("--center", bet_center)->required();
    bet->add_option("--radius", bet_r);

    // tst / bwgl
    auto* tst = app.add_subcommand("tst", "run a TST experiment and write its bundle");
    std::string tst_out = "bundle";
    tst->add_option("-o,--out", tst_out, "bundle directory");
    auto* bwg = app.add_subcommand("bwgl", "BWGL classification of the experiment's cubes");
    std::string bwg_out;
    bwg->add_option("-o,--out", bwg_out, "CSV output (stdout if empty)");

    // reifenberg
    auto* rei = app.add_subcommand("reifenberg", "iterate a CCBP and certify the surface");
    std::string rei_in, rei_out = "surface";
    double rei_h = 1e-3, rei_extent = 0, rei_eps = 0.01;
    int rei_K = 5;
    rei->add_option("-i,--input", rei_in, "CCBP JSON")->required();
    rei->add_option("--pitch", rei_h, "lattice pitch on P0");
    rei->add_option("--K", rei_K, "layers to apply");
    rei->add_option("--extent", rei_extent, "lattice half-width (0 = automatic)");
    rei->add_option("--eps", rei_eps, "ε for validation and certificate normalisation");
    rei->add_option("-o,--out", rei_out, "output directory");

    // dorronsoro
    auto* dor = app.add_subcommand("dorronsoro", "Ω-number dyadic sums of a sampled function");
    std::string dor_in, dor_out;
    int dor_d = 1, dor_depth = 6;
    double dor_p = 2;
    dor->add_option("-i,--input", dor_in, "lattice CSV")->required();
    dor->add_option("--d", dor_d);
    dor->add_option("--p", dor_p, "exponent (inf allowed)");
    dor->add_option("--depth", dor_depth);
    dor->add_option("-o,--out", dor_out);

    // report
    auto* rep = app.add_subcommand("report", "plot-ready CSVs from experiment bundles");
    std::vector<std::string> rep_in;
    std::string rep_out = "report";
    rep->add_option("bundles", rep_in, "bundle directories")->required();
    rep->add_option("-o,--out", rep_out);

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        return app.exit(e);
    }
    if (*seed_opt)
        g.seed = seed_value;

    try
    {
        json cfg = load_config(g);
        if (*gen)
        {
            DatasetSpec s = dataset_from_json(cfg.value("dataset", json::object()));
            json over;
            if (!gen_family.empty())
                over["family"] = gen_family;
            for (const auto& [key, o] : gen_fields)
                if (o->count() > 0)
                    over[key] = json::parse(o->as<std::string>());
            s = dataset_from_json(over, s);
            if (g.seed)
                s.seed = *g.seed;
            PointCloud E = generate(s);
            save_cloud(gen_out, E);
            std::cerr << "wrote " << E.size() << " points to " << gen_out << "\n";
        }
        else if (*cub)
        {
            auto E = std::make_shared<const PointCloud>(load_cloud(cub_in));
            CubeTree T = build_cubes(build_nets(E, cub_rho, cub_k), cub_c0);
            if (cub_out.empty())
                write_cubes(std::cout, T);
            else
            {
                std::ofstream os(cub_out);
                write_cubes(os, T);
            }
        }
        else if (*con)
        {
            PointCloud E = load_cloud(con_in);
            auto est = hausdorff_content(E, con_d, Ball(parse_point(con_center), con_r));
            std::cout << std::setprecision(17) << "value " << est.value << "\ncover " << est.cover.size() << "\n";
        }
        else if (*bet)
        {
            PointCloud E = load_cloud(bet_in);
            Ball B(parse_point(bet_center), bet_r);
            BetaValue v;
            if (bet_kind == "inf")
                v = beta_inf(E, B, bet_d);
            else if (bet_kind == "dp")
                v = beta_dp(E, B, bet_d, bet_p);
            else if (bet_kind == "bbeta")
                v = bbeta(E, B, bet_d);
            else
                throw InputError("unknown beta kind '" + bet_kind + "'");
            json j{{"kind", to_string(v.kind)},
                   {"value", v.value},
                   {"degenerate", v.degenerate},
                   {"sample_size", v.sample_size},
                   {"plane", to_json(v.plane)}};
            emit(j, "");
        }
        else if (*tst || *bwg)
        {
            ExperimentConfig c = config_from_json(cfg);
            if (g.seed)
                c.dataset.seed = *g.seed;
            ExperimentResult r = run_experiment(c);
            for (const auto& w : r.summary().at("warnings"))
                std::cerr << w.get<std::string>() << "\n";
            if (*tst)
            {
                write_bundle(r, tst_out);
                std::cout << tst_json(r.report).dump(2) << "\n";
                return r.pass() ? 0 : 1;
            }
            std::ostringstream os;
            os << std::setprecision(17) << "level,id,bwgl_flag,ell_d\n";
            for (const auto& q : r.report.cubes)
                os << q.level << ',' << q.id << ',' << (q.bwgl ? 1 : 0) << ',' << q.ell_d << '\n';
            if (bwg_out.empty())
                std::cout << os.str();
            else
                write_text(bwg_out, os.str());
            std::cerr << std::setprecision(17) << "bwgl_sum " << r.report.bwgl_sum << "\n";
        }
        else if (*rei)
        {
            CCBP c = ccbp_from_json(json::parse(read_text(rei_in)));
            EpsilonProfile prof = validate_ccbp(c, rei_eps);
            SurfaceIterate s = iterate(c, rei_h, rei_K, rei_extent);
            CertifyOptions opt;
            opt.eps = rei_eps;
            if (g.seed)
                opt.seed = *g.seed;
            CertificateReport cert = certify(s, c, opt);
            BilipCertificate bl = bilip_certificate(s, c);
            std::filesystem::create_directories(rei_out);
            for (std::size_t k = 0; k < s.images.size(); ++k)
            {
                std::ofstream os(std::filesystem::path(rei_out) / ("level_" + std::to_string(k) + ".csv"));
                write_cloud_csv(os, PointCloud(s.images[k], s.h));
            }
            if (s.d == 2)
            {
                std::ofstream os(std::filesystem::path(rei_out) / "surface.off");
                write_off(os, s);
            }
            json items = json::array();
            for (const auto& it : cert.items)
                items.push_back({{"item", it.item},
                                 {"description", it.description},
                                 {"measured", it.measured},
                                 {"constant", it.constant},
                                 {"ceiling", it.ceiling},
                                 {"pass", it.pass},
                                 {"per_level", it.per_level}});
            json j{{"schema", "tstlab.certificate/1"},
                   {"eps", rei_eps},
                   {"profile_max", prof.profile_max},
                   {"valid", prof.valid},
                   {"layers_applied", s.layers_applied()},
                   {"displacement", s.displacement},
                   {"items", items},
                   {"bilipschitz", {{"M", bl.M}, {"distortion", bl.distortion}}},
                   {"pass", cert.pass()}};
            write_text(std::filesystem::path(rei_out) / "certificate.json", j.dump(2) + "\n");
            return cert.pass() ? 0 : 1;
        }
        else if (*dor)
        {
            std::ifstream is(dor_in);
            if (!is)
                throw InputError("cannot open " + dor_in);
            SampledFunction f = read_sampled_function(is, dor_d);
            OmegaReport r = omega_sum(f, dor_p, dor_depth);
            json cubes = json::array();
            for (const auto& q : r.cubes)
                cubes.push_back({{"level", q.level},
                                 {"center", std::vector<double>(q.center.data(), q.center.data() + q.center.size())},
                                 {"side", q.side},
                                 {"omega", q.omega}});
            json j{{"schema", "tstlab.omega/1"},
                   {"p", std::isinf(r.p) ? json("inf") : json(r.p)},
                   {"depth", r.depth},
                   {"sum_sq", r.sum_sq},
                   {"sum_p", r.sum_p},
                   {"normalization", r.normalization},
                   {"ratio_sq", r.ratio_sq()},
                   {"ratio_p", r.ratio_p()},
                   {"cubes", cubes}};
            emit(j, dor_out);
        }
        else if (*rep)
        {
            std::vector<std::filesystem::path> paths(rep_in.begin(), rep_in.end());
            write_report(paths, rep_out);
        }
    }
    catch (const CcbpError& e)
    {
        std::cerr << "error [" << e.condition << "]: " << e.what() << "\n";
        return 2;
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

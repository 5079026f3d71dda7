#pragma once

#include "tstlab/beta.hpp"
#include "tstlab/cubes.hpp"
#include "tstlab/generate.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace tstlab {

inline constexpr const char* kSummarySchema = "tstlab.experiment/1";

struct Ceilings
{
    //! two-sided ratio must lie in [1/C, C] at the final depth
    std::optional<double> two_sided = 10.0;
    std::optional<double> thm15;
    std::optional<double> thm16;
    std::optional<double> bwgl_max;
    //! |r(b)/r(a) - 1| bound for the two-sided ratio between depths a < b
    std::optional<double> stability = 0.5;
    int stability_from = 6;
    int stability_to = 8;
};

struct ExperimentConfig
{
    std::string name = "experiment";
    DatasetSpec dataset;
    double rho = 0.5;
    double c0 = 1.0 / 30;
    double scale0 = 0;
    int root_level = 0;
    int depth = 6;
    TstParams tst;
    Ceilings ceilings;

    //! Throws InputError on violated constraints; returns warnings.
    std::vector<std::string> validate() const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& cfg);
DatasetSpec dataset_from_json(const nlohmann::json& j, DatasetSpec base = {});
nlohmann::json to_json(const DatasetSpec& s);

struct RatioRow
{
    int depth = 0;
    double tst_sum = 0;     //!< ell(Q0)^d + Σ β² ell^d
    double bwgl_sum = 0;
    double measure = 0;     //!< Σ ell^d over the cubes at this depth
    double two_sided = 0;   //!< (tst + bwgl) / (measure + bwgl)
    double thm15 = 0;       //!< tst / (measure + bwgl)
    double thm16 = 0;       //!< (measure + bwgl) / tst
};

struct Check
{
    std::string name;
    double value = 0;
    double lo = 0, hi = 0;
    bool pass = false;
};

struct ExperimentResult
{
    ExperimentConfig config;
    std::size_t cloud_size = 0;
    double resolution = 0;
    int root = -1;
    TSTReport report;
    std::vector<RatioRow> rows;
    std::vector<Check> checks;
    std::vector<std::string> warnings;
    bool pass() const;

    nlohmann::json summary() const;
    //! header: level,id,beta,bwgl_flag,ell_d
    std::string cubes_csv() const;
};

//! Cube at `level` containing the cloud point nearest the bounding-box center.
int root_cube(const CubeTree& tree, int level);

std::vector<RatioRow> ratio_rows(const TSTReport& rep);

ExperimentResult run_experiment(const ExperimentConfig& cfg);

//! summary.json and cubes.csv in dir (created if needed).
void write_bundle(const ExperimentResult& r, const std::filesystem::path& dir);

//! From bundle directories, writes beta_histogram.csv
//! (run,level,bin,bin_lo,bin_hi,count) and ratio_vs_depth.csv
//! (run,depth,tst_sum,bwgl_sum,measure,two_sided,thm15,thm16) into out.
void write_report(const std::vector<std::filesystem::path>& bundles, const std::filesystem::path& out);

}  // namespace tstlab

#pragma once

#include "tstlab/geometry.hpp"

#include <cstddef>
#include <vector>

namespace tstlab {

struct ContentEstimate
{
    double value = 0;
    double d = 1;
    double resolution = 0;
    std::vector<Ball> cover;
};

//! Greedy multiscale covers of subsets of a fixed base point set.
//!
//! Candidate covers are the cells of nested greedy nets built on the base
//! set, one candidate per level plus the whole set. A cell contributes
//! (diam(cell ∩ S) + h)^d with h the base resolution. Every candidate is
//! monotone under inclusion, so the estimate is too.
class ContentEstimator
{
  public:
    ContentEstimator(const PointCloud& base, double d, double rho = 0.5);

    std::size_t size() const { return static_cast<std::size_t>(pts_.cols()); }
    double d() const { return d_; }
    double resolution() const { return h_; }
    int num_levels() const { return static_cast<int>(levels_.size()); }

    double value(const std::vector<std::size_t>& subset) const;
    double value_all() const;
    ContentEstimate estimate(const std::vector<std::size_t>& subset) const;

    //! Running estimate while points are added one at a time.
    class Accumulator
    {
      public:
        explicit Accumulator(const ContentEstimator& est);
        void insert(std::size_t i);
        double value() const;
        //! Index of the cheapest level.
        int best_level() const;

      private:
        friend class ContentEstimator;
        struct CellState
        {
            int count = 0;
            double max_center_sq = 0;
            double max_pair_sq = 0;
            double term = 0;
        };
        struct LevelState
        {
            std::vector<CellState> cells;
            Matrix lo, hi;
            //! inserted points of exact cells, at the cell's offset
            std::vector<std::size_t> slots;
        };
        double term_of(const CellState& c, const LevelState& s, std::size_t ci,
                       bool exact) const;

        const ContentEstimator* est_;
        std::vector<LevelState> levels_;
        std::vector<double> sums_;
        std::size_t inserted_ = 0;
    };

  private:
    struct Level
    {
        std::vector<std::size_t> centers;  // base index of each cell center
        std::vector<int> cell_of;          // per base point
        std::vector<char> exact;           // per cell: exact pairwise diameter
        std::vector<std::size_t> offset;   // per cell: start of its slot range
    };

    Matrix pts_;
    double d_;
    double h_;
    std::vector<Level> levels_;
};

ContentEstimate hausdorff_content(const PointCloud& cloud, double d, const Ball& B);

enum class ChoquetRange
{
    unbounded,  //!< integrate t over [0, inf)
    unit        //!< integrate t over [0, 1]
};

//! ∫_0^T H^d_∞({f > t}) t^{p-1} dt evaluated exactly between the sorted
//! values of f, with the content estimates taken from `est` (f indexed like
//! the estimator's base set).
double choquet_integral(const ContentEstimator& est, const std::vector<double>& f,
                        double p, ChoquetRange range = ChoquetRange::unbounded);

//! Same, over E ∩ B with a fresh estimator; f is indexed like E.
double choquet_integral(const std::vector<double>& f, const PointCloud& E, const Ball& B,
                        double d, double p, ChoquetRange range = ChoquetRange::unbounded);

//! Critical exponent 2d/(d-2) for d > 2, +inf otherwise.
double critical_exponent(double d);

}  // namespace tstlab

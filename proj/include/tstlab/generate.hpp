#pragma once

#include "tstlab/geometry.hpp"

#include <cstdint>
#include <string>

namespace tstlab {

enum class Family { segment, circle, lipschitz_graph, koch, cantor4, perturbed_plane };

const char* to_string(Family f);
Family family_from_string(const std::string& s);

struct DatasetSpec
{
    Family family = Family::segment;
    int n = 2;             //!< ambient dimension
    int d = 1;             //!< perturbed_plane only
    double lambda = 0.1;   //!< Lipschitz constant
    double angle = 30;     //!< Koch peak angle, degrees
    int depth = 0;         //!< Koch / Cantor iteration depth
    double noise = 0.01;   //!< perturbed_plane normal amplitude
    double lo = 0, hi = 1; //!< parameter domain (segment, graph, plane)
    int modes = 16;        //!< Fourier modes of the graph
    std::uint64_t seed = 1;
    std::size_t count = 4096;  //!< target sample count

    void validate() const;
};

PointCloud generate(const DatasetSpec& spec);

//! Lipschitz constant realised by lipschitz_graph (max |f'| after clamping).
double graph_lipschitz(const DatasetSpec& spec);

//! Koch length growth per generator step: 4 / (2 (1 + cos angle)).
double koch_step_growth(double angle_deg);
//! Similarity dimension log 4 / log(2 (1 + cos angle)).
double koch_dimension(double angle_deg);

}  // namespace tstlab

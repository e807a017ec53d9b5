#pragma once

#include <vector>

#include "defreg/fields.hpp"
#include "defreg/image.hpp"

namespace defreg {

struct DicParams {
    int subset_radius = 10;
    int step = 4;
    int search_radius = 20;
    double strain_radius = 5.0;
    double min_correlation = 0.8;

    void validate() const;
};

struct DicSeed {
    int x = 0;
    int y = 0;
    int peak_dx = 0;  // integer search result
    int peak_dy = 0;
    double u = 0.0;
    double v = 0.0;
    double correlation = 0.0;
    bool valid = false;
};

struct DicMeasurement {
    DisplacementField field;  // valid only at accepted seeds
    std::vector<DicSeed> seeds;
};

// Circular-subset ZNCC matching on a regular seed grid: exhaustive integer
// search, then a quadratic surface fit to the 3x3 correlation neighbourhood
// of the peak. Throws EmptyResultError when no seed is accepted.
DicMeasurement dic_measure(const GrayImage& reference, const GrayImage& deformed,
                           const DicParams& params);

inline DisplacementField dic_displacement(const GrayImage& reference, const GrayImage& deformed,
                                          const DicParams& params) {
    return dic_measure(reference, deformed, params).field;
}

// Green-Lagrange strain from least-squares planes fitted to the valid
// displacement samples within strain_radius of each valid sample.
StrainField dic_strain(const DisplacementField& field, double strain_radius);

}  // namespace defreg

#pragma once

#include <cstddef>
#include <vector>

#include "qh/errors.hpp"

namespace qh {

struct PhysicalConstants {
    double hbar = 1.0;
    std::vector<double> masses{1.0};
    double charge = 1.0;
    double light_speed = 1.0;

    // Mass attached to a grid axis; a single mass applies to every axis.
    double mass(std::size_t axis = 0) const { return masses.size() == 1 ? masses[0] : masses.at(axis); }

    void validate() const {
        if (!(hbar > 0.0)) throw Error("hbar must be positive");
        if (masses.empty()) throw Error("at least one mass is required");
        for (double m : masses)
            if (!(m > 0.0)) throw Error("masses must be positive");
        if (!(light_speed > 0.0)) throw Error("light speed must be positive");
    }
};

}  // namespace qh

#pragma once

#include <string>

#include "qh/field.hpp"

namespace qh {

enum class SnapshotMode { Text, Binary };

// Format is described in docs/formats.md. Complex fields store (re, im) pairs per node.
void write_snapshot(const std::string& path, const ScalarField& f, double time, SnapshotMode mode);
void write_snapshot(const std::string& path, const Wavefunction& f, double time, SnapshotMode mode);

struct Snapshot {
    Grid grid;
    double time = 0.0;
    int components = 1;
    std::vector<double> values;

    ScalarField scalar() const;
    Wavefunction wavefunction() const;
};

Snapshot read_snapshot(const std::string& path, SnapshotMode mode);

}  // namespace qh

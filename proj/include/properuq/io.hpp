#ifndef PROPERUQ_IO_HPP
#define PROPERUQ_IO_HPP

#include <string>

#include "properuq/types.hpp"

namespace properuq {

// Predictions CSV: header "p1,...,pd,label", labels 1-based in the file.
// Parse errors name the physical line number (header is line 1).
LabeledPredictionSet load_predictions(const std::string& path);
void save_predictions(const std::string& path, const LabeledPredictionSet& data);

// Simplex rows without labels: header "p1,...,pd". Used for ensemble member
// prediction lists.
std::vector<SimplexVector> load_simplex_rows(const std::string& path);

// Samples CSV: header "x1,...,xq".
SampleSet load_samples(const std::string& path);
void save_samples(const std::string& path, const SampleSet& samples);

// Ensemble manifest JSON: {"members": [["m1r1.csv", ...], ...]}, one inner
// list per member, one path per replicate. Paths resolve relative to the
// manifest's directory. The grid must be rectangular.
EnsembleGrid load_ensemble(const std::string& manifest_path);

// FNV-1a 64 digest of a file's bytes, hex-encoded. Used for provenance ids
// and run manifests.
std::string file_digest(const std::string& path);

// FNV-1a 64 digest of a byte buffer, hex-encoded.
std::string bytes_digest(const void* data, std::size_t size);

}  // namespace properuq

#endif

#ifndef WAVEBC_DATASET_HPP
#define WAVEBC_DATASET_HPP

#include <string>
#include <vector>

#include "wavebc/run_config.hpp"

namespace wavebc {

/// Named float64 array with declared dimensions.
struct NamedArray {
    std::string name;
    std::vector<std::uint64_t> dims;
    Eigen::VectorXd data;  // row-major over dims
};

/// Self-describing binary container: magic "RBC1", version, manifest text,
/// length-prefixed named float64 little-endian arrays, trailing checksum.
struct DatasetContainer {
    std::string manifest;
    std::vector<NamedArray> arrays;

    bool has(const std::string& name) const;
    const NamedArray& get(const std::string& name) const;
    void add(const std::string& name, std::vector<std::uint64_t> dims, Eigen::VectorXd data);
};

/// Atomic write (temp file + rename).
void write_dataset(const std::string& path, const DatasetContainer& ds);
DatasetContainer read_dataset(const std::string& path);

/// Response dataset: manifest echoes the run config; kernel plus optional truth
/// and oracle arrays.
DatasetContainer dataset_from_response(const RunConfig& cfg, const ResponseData& R);
ResponseData response_from_dataset(const DatasetContainer& ds, RunConfig& cfg_out);

}  // namespace wavebc

#endif

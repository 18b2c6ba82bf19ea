#pragma once

// `y,w,cluster` observation files for the analyze command.

#include "clusteradj/sample.hpp"

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace clusteradj {

struct AnalysisInput {
    /// Rows grouped by cluster in order of first appearance; cluster_ids
    /// are 1-based positions into `labels`.
    Sample sample;
    std::vector<std::string> labels;  ///< cluster label as written in the file
    std::filesystem::path source;
    std::size_t rows = 0;          ///< data rows read
    std::size_t blank_lines = 0;   ///< skipped empty lines
};

/// Throws DataError (with line context) on a missing column, non-numeric y,
/// w outside {0, 1}, an empty cluster label, no rows, or a single arm.
AnalysisInput load_dataset_csv(const std::filesystem::path& path);

/// Parses CSV text; `source` is used only in messages.
AnalysisInput parse_dataset_csv(const std::string& text, const std::filesystem::path& source = "input");

/// Writes `y,w,cluster` with shortest round-trip number formatting.
void write_dataset_csv(const std::filesystem::path& path, const Sample& s);

}  // namespace clusteradj

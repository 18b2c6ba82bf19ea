#include "clusteradj/dataset.hpp"

#include "clusteradj/error.hpp"
#include "csv.hpp"

#include <fstream>
#include <sstream>
#include <unordered_map>

namespace clusteradj {

AnalysisInput parse_dataset_csv(const std::string& text, const std::filesystem::path& source) {
    AnalysisInput in;
    in.source = source;
    std::istringstream lines(text);
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::size_t> cols;

    struct Row {
        double y, w;
    };
    std::vector<std::vector<Row>> groups;
    std::unordered_map<std::string, std::size_t> index;

    while (std::getline(lines, line)) {
        ++line_no;
        std::string_view view = line;
        if (line_no == 1) view = csv::strip_bom(view);
        if (csv::trim(view).empty()) {
            ++in.blank_lines;
            continue;
        }
        const auto fields = csv::split(view);
        if (cols.empty()) {
            cols = csv::locate_columns(fields, {"y", "w", "cluster"});
            continue;
        }
        if (fields.size() < 3) {
            throw DataError(csv::row_context(line_no) + ": expected " + std::to_string(3) +
                            " fields, found " + std::to_string(fields.size()));
        }
        for (std::size_t c : cols) {
            if (c >= fields.size()) throw DataError(csv::row_context(line_no) + ": missing field");
        }
        const double y = csv::parse_real(fields[cols[0]], "y", line_no);
        const double w = csv::parse_real(fields[cols[1]], "w", line_no);
        if (w != 0.0 && w != 1.0) {
            throw DataError(csv::row_context(line_no) + ": column 'w' must be 0 or 1, got '" +
                            std::string(fields[cols[1]]) + "'");
        }
        const std::string label(fields[cols[2]]);
        if (label.empty()) throw DataError(csv::row_context(line_no) + ": empty cluster label");
        auto [it, fresh] = index.emplace(label, groups.size());
        if (fresh) {
            groups.emplace_back();
            in.labels.push_back(label);
        }
        groups[it->second].push_back({y, w});
        ++in.rows;
    }
    if (cols.empty()) throw DataError(source.string() + ": missing header 'y,w,cluster'");
    if (in.rows == 0) throw DataError(source.string() + ": no data rows");

    std::size_t treated = 0;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        for (const Row& r : groups[g]) {
            in.sample.push(static_cast<std::int64_t>(g) + 1, r.y, r.w);
            treated += r.w != 0.0;
        }
    }
    in.sample.finish();
    if (treated == 0 || treated == in.rows) {
        throw DataError(source.string() + ": only one treatment arm present (" +
                        std::to_string(treated) + " treated of " + std::to_string(in.rows) + " rows)");
    }
    return in;
}

AnalysisInput load_dataset_csv(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot read '" + path.string() + "'");
    std::stringstream buf;
    buf << f.rdbuf();
    return parse_dataset_csv(buf.str(), path);
}

void write_dataset_csv(const std::filesystem::path& path, const Sample& s) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << "y,w,cluster\n";
    for (std::size_t g = 0; g < s.clusters(); ++g) {
        for (std::size_t i = s.offsets[g]; i < s.offsets[g + 1]; ++i) {
            out << csv::format_real(s.y[i]) << ',' << (s.w[i] != 0.0 ? 1 : 0) << ',' << s.cluster_ids[g]
                << '\n';
        }
    }
    if (!out) throw Error("write failed: '" + path.string() + "'");
}

}  // namespace clusteradj

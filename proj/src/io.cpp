#include "properuq/io.hpp"

#include <nlohmann/json.hpp>

#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace properuq {
namespace {

std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}

// %.17g round-trips every finite double exactly through parse.
std::string format_full(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_double(const std::string& s, const std::string& where) {
    errno = 0;
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0' || errno == ERANGE) {
        throw std::runtime_error(where + ": bad number '" + s + "'");
    }
    return v;
}

long parse_long(const std::string& s, const std::string& where) {
    errno = 0;
    char* end = nullptr;
    long v = std::strtol(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0' || errno == ERANGE) {
        throw std::runtime_error(where + ": bad integer '" + s + "'");
    }
    return v;
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path);
    }
    return in;
}

// Reads a CSV with d value columns named prefix1..prefixd, plus optionally a
// trailing "label" column. Returns rows of doubles and (if labeled) labels.
struct CsvTable {
    std::vector<std::vector<double>> rows;
    std::vector<long> labels;
    int value_cols = 0;
};

CsvTable read_value_csv(const std::string& path, const std::string& prefix, bool labeled) {
    std::ifstream in = open_input(path);
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error(path + ": empty file");
    }
    std::vector<std::string> header = split_csv_line(line);
    int cols = static_cast<int>(header.size());
    int value_cols = labeled ? cols - 1 : cols;
    if (value_cols < 1) {
        throw std::runtime_error(path + ": header has too few columns");
    }
    for (int j = 0; j < value_cols; ++j) {
        std::string expected = prefix + std::to_string(j + 1);
        if (header[j] != expected) {
            throw std::runtime_error(path + ": header column " + std::to_string(j + 1) +
                                     " is '" + header[j] + "', expected '" + expected + "'");
        }
    }
    if (labeled && header.back() != "label") {
        throw std::runtime_error(path + ": last header column must be 'label'");
    }

    CsvTable table;
    table.value_cols = value_cols;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        std::vector<std::string> fields = split_csv_line(line);
        if (static_cast<int>(fields.size()) != cols) {
            throw std::runtime_error(path + ": row " + std::to_string(line_no) + ": " +
                                     std::to_string(fields.size()) + " fields, expected " +
                                     std::to_string(cols));
        }
        std::string where = path + ": row " + std::to_string(line_no);
        std::vector<double> row(value_cols);
        for (int j = 0; j < value_cols; ++j) {
            row[j] = parse_double(fields[j], where);
        }
        table.rows.push_back(std::move(row));
        if (labeled) {
            table.labels.push_back(parse_long(fields.back(), where));
        }
    }
    if (table.rows.empty()) {
        throw std::runtime_error(path + ": no data rows");
    }
    return table;
}

std::vector<SimplexVector> rows_to_simplex(const CsvTable& table, const std::string& path) {
    std::vector<SimplexVector> out;
    out.reserve(table.rows.size());
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        double sum = 0.0;
        for (double v : row) sum += v;
        // Report the mass violation with the file row before the generic
        // simplex validation can obscure it.
        int line_no = static_cast<int>(i) + 2;
        if (std::abs(sum - 1.0) > 1e-9) {
            throw std::runtime_error(path + ": row " + std::to_string(line_no) + ": mass " +
                                     format_double(sum));
        }
        Eigen::VectorXd p(row.size());
        for (std::size_t j = 0; j < row.size(); ++j) p(static_cast<Eigen::Index>(j)) = row[j];
        try {
            out.emplace_back(std::move(p));
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ": row " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace

LabeledPredictionSet load_predictions(const std::string& path) {
    CsvTable table = read_value_csv(path, "p", /*labeled=*/true);
    std::vector<SimplexVector> preds = rows_to_simplex(table, path);
    std::vector<int> labels;
    labels.reserve(table.labels.size());
    for (std::size_t i = 0; i < table.labels.size(); ++i) {
        long raw = table.labels[i];
        if (raw < 1 || raw > table.value_cols) {
            throw std::runtime_error(path + ": row " + std::to_string(i + 2) + ": label " +
                                     std::to_string(raw) + " outside 1.." +
                                     std::to_string(table.value_cols));
        }
        labels.push_back(static_cast<int>(raw - 1));
    }
    return LabeledPredictionSet(std::move(preds), std::move(labels), file_digest(path));
}

void save_predictions(const std::string& path, const LabeledPredictionSet& data) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path);
    }
    int d = data.dim();
    for (int j = 0; j < d; ++j) {
        out << "p" << (j + 1) << ",";
    }
    out << "label\n";
    for (int i = 0; i < data.size(); ++i) {
        const Eigen::VectorXd& p = data.prediction(i).probs();
        for (int j = 0; j < d; ++j) {
            out << format_full(p(j)) << ",";
        }
        out << (data.label(i) + 1) << "\n";
    }
    if (!out) {
        throw std::runtime_error("write failed for " + path);
    }
}

std::vector<SimplexVector> load_simplex_rows(const std::string& path) {
    CsvTable table = read_value_csv(path, "p", /*labeled=*/false);
    return rows_to_simplex(table, path);
}

SampleSet load_samples(const std::string& path) {
    CsvTable table = read_value_csv(path, "x", /*labeled=*/false);
    Eigen::MatrixXd m(static_cast<Eigen::Index>(table.rows.size()), table.value_cols);
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        for (int j = 0; j < table.value_cols; ++j) {
            m(static_cast<Eigen::Index>(i), j) = table.rows[i][j];
        }
    }
    return SampleSet(std::move(m), file_digest(path));
}

void save_samples(const std::string& path, const SampleSet& samples) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path);
    }
    int q = samples.point_dim();
    for (int j = 0; j < q; ++j) {
        out << "x" << (j + 1) << (j + 1 < q ? "," : "\n");
    }
    const Eigen::MatrixXd& pts = samples.points();
    for (int i = 0; i < samples.size(); ++i) {
        for (int j = 0; j < q; ++j) {
            out << format_full(pts(i, j)) << (j + 1 < q ? "," : "\n");
        }
    }
    if (!out) {
        throw std::runtime_error("write failed for " + path);
    }
}

EnsembleGrid load_ensemble(const std::string& manifest_path) {
    std::ifstream in = open_input(manifest_path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const std::exception& e) {
        throw std::runtime_error(manifest_path + ": bad JSON: " + e.what());
    }
    if (!doc.is_object() || !doc.contains("members") || !doc["members"].is_array()) {
        throw std::runtime_error(manifest_path + ": expected object with 'members' array");
    }
    std::filesystem::path base = std::filesystem::path(manifest_path).parent_path();
    std::vector<std::vector<SampleSet>> members;
    for (const auto& member : doc["members"]) {
        if (!member.is_array()) {
            throw std::runtime_error(manifest_path + ": member entries must be arrays of paths");
        }
        std::vector<SampleSet> replicates;
        for (const auto& entry : member) {
            if (!entry.is_string()) {
                throw std::runtime_error(manifest_path + ": replicate paths must be strings");
            }
            std::filesystem::path p = entry.get<std::string>();
            if (p.is_relative()) p = base / p;
            replicates.push_back(load_samples(p.string()));
        }
        members.push_back(std::move(replicates));
    }
    return EnsembleGrid(std::move(members));
}

std::string bytes_digest(const void* data, std::size_t size) {
    const unsigned char* bytes = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= bytes[i];
        h *= 0x100000001B3ULL;
    }
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    std::string bytes = ss.str();
    return bytes_digest(bytes.data(), bytes.size());
}

}  // namespace properuq

#pragma once

// File formats: the GMM JSON schema, RFC-4180 CSV emission with full-precision
// numbers (shortest round-trip), and scenario-file parsing.
//
// GMM schema (row-major covariances):
//   {"weights": [...], "means": [[...], ...], "covariances": [[[...], ...], ...]}

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gmmflow/errors.hpp"
#include "gmmflow/mixture.hpp"
#include "gmmflow/scenarios.hpp"

#include "json.hpp"

namespace gmmflow {

// Shortest decimal string that round-trips the double exactly.
inline std::string format_full(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string format_fixed(double v, int decimals = 2) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return std::string(buf);
}

// Minimal RFC-4180 writer: header row, CRLF line endings, quoting only when
// a field needs it.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {}

    void add_row(std::vector<std::string> row) {
        if (row.size() != header_.size())
            throw Error("CsvWriter: row width does not match header");
        rows_.push_back(std::move(row));
    }

    std::string str() const {
        std::ostringstream out;
        write_line(out, header_);
        for (const auto& row : rows_) write_line(out, row);
        return out.str();
    }

    void save(const std::string& path) const {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw IoError("cannot open '" + path + "' for writing");
        f << str();
        if (!f) throw IoError("failed writing '" + path + "'");
    }

private:
    static void write_line(std::ostringstream& out, const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out << ',';
            out << escaped(fields[i]);
        }
        out << "\r\n";
    }

    static std::string escaped(const std::string& field) {
        if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
        std::string quoted = "\"";
        for (char c : field) {
            if (c == '"') quoted += '"';
            quoted += c;
        }
        quoted += '"';
        return quoted;
    }

    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

namespace io_detail {

inline nlohmann::json parse_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open '" + path + "'");
    try {
        return nlohmann::json::parse(f);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("'" + path + "': " + e.what());
    }
}

} // namespace io_detail

// Loads and validates a GMM file.  Weight sums off by less than 1e-9 are
// renormalized (recorded in *note when given); anything worse is an error.
// Validation messages name the offending component.
inline Gmm load_gmm(const std::string& path, std::string* note = nullptr) {
    const nlohmann::json doc = io_detail::parse_file(path);
    if (!doc.is_object() || !doc.contains("weights") || !doc.contains("means") ||
        !doc.contains("covariances"))
        throw ParseError("'" + path + "': expected object with weights/means/covariances");

    const auto& jw = doc.at("weights");
    const auto& jm = doc.at("means");
    const auto& jc = doc.at("covariances");
    const std::size_t k = jw.size();
    if (k == 0) throw ValidationError("'" + path + "': no components");
    if (jm.size() != k || jc.size() != k)
        throw ValidationError("'" + path + "': weights/means/covariances lengths differ");

    VectorXd weights(static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < k; ++i) {
        if (!jw[i].is_number())
            throw ParseError("'" + path + "': weight " + std::to_string(i) + " not a number");
        weights(static_cast<Eigen::Index>(i)) = jw[i].get<double>();
        if (weights(static_cast<Eigen::Index>(i)) < 0.0)
            throw ValidationError("'" + path + "': component " + std::to_string(i) +
                                  " has negative weight");
    }
    const double sum = weights.sum();
    if (std::abs(sum - 1.0) >= 1e-9)
        throw ValidationError("'" + path + "': weights sum to " + format_full(sum) +
                              " (must be 1 within 1e-9)");
    if (sum != 1.0) {
        weights /= sum;
        if (note) *note = "weights renormalized (sum was " + format_full(sum) + ")";
    }

    std::vector<Gaussian> comps;
    comps.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        const auto& mean_j = jm[i];
        const auto& cov_j = jc[i];
        const int d = static_cast<int>(mean_j.size());
        VectorXd mean(d);
        for (int a = 0; a < d; ++a) mean(a) = mean_j[static_cast<std::size_t>(a)].get<double>();
        if (static_cast<int>(cov_j.size()) != d)
            throw ValidationError("'" + path + "': component " + std::to_string(i) +
                                  " covariance rows do not match mean length");
        MatrixXd cov(d, d);
        for (int a = 0; a < d; ++a) {
            const auto& row = cov_j[static_cast<std::size_t>(a)];
            if (static_cast<int>(row.size()) != d)
                throw ValidationError("'" + path + "': component " + std::to_string(i) +
                                      " covariance is not square");
            for (int b = 0; b < d; ++b) cov(a, b) = row[static_cast<std::size_t>(b)].get<double>();
        }
        try {
            comps.emplace_back(std::move(mean), SpdMatrix(std::move(cov)));
        } catch (const Error& e) {
            throw ValidationError("'" + path + "': component " + std::to_string(i) + ": " +
                                  e.what());
        }
    }
    try {
        return Gmm(weights, std::move(comps));
    } catch (const ValidationError& e) {
        throw ValidationError("'" + path + "': " + e.what());
    }
}

inline std::vector<ScenarioSpec> load_scenarios(const std::string& path) {
    const nlohmann::json doc = io_detail::parse_file(path);
    if (!doc.is_array()) throw ParseError("'" + path + "': expected a JSON array");
    std::vector<ScenarioSpec> specs;
    for (const auto& item : doc) {
        ScenarioSpec spec;
        spec.name = item.at("name").get<std::string>();
        spec.dim = item.value("dim", 0);
        spec.generator = item.at("generator").get<std::string>();
        spec.parameters = item.value("parameters", nlohmann::json::object());
        spec.seed = item.value("seed", 0ull);
        specs.push_back(std::move(spec));
    }
    return specs;
}

inline void save_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    f << text;
    if (!f) throw IoError("failed writing '" + path + "'");
}

} // namespace gmmflow

#ifndef DAGAVG_IO_HPP
#define DAGAVG_IO_HPP

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dagavg/core.hpp"

namespace dagavg {

// ---------------------------------------------------------------------------
// CSV ingestion
// ---------------------------------------------------------------------------

/// Malformed cell. Rows count data lines (header excluded) and columns start at 1.
class ParseError : public DataError {
public:
    ParseError(std::size_t row, std::size_t col, const std::string& what)
        : DataError("parse error at row " + std::to_string(row) + ", column " + std::to_string(col) + ": " + what),
          row_(row), col_(col) {}
    [[nodiscard]] std::size_t row() const noexcept { return row_; }
    [[nodiscard]] std::size_t col() const noexcept { return col_; }

private:
    std::size_t row_;
    std::size_t col_;
};

class DuplicateHeader : public DataError {
public:
    explicit DuplicateHeader(const std::string& name) : DataError("duplicate header name '" + name + "'"), name_(name) {}
    [[nodiscard]] const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

class MissingValue : public DataError {
public:
    MissingValue(std::size_t row, std::size_t col)
        : DataError("missing value at row " + std::to_string(row) + ", column " + std::to_string(col)),
          row_(row), col_(col) {}
    [[nodiscard]] std::size_t row() const noexcept { return row_; }
    [[nodiscard]] std::size_t col() const noexcept { return col_; }

private:
    std::size_t row_;
    std::size_t col_;
};

class ConstantColumn : public DataError {
public:
    explicit ConstantColumn(Index col) : DataError("column " + std::to_string(col) + " has zero variance"), col_(col) {}
    [[nodiscard]] Index column() const noexcept { return col_; }

private:
    Index col_;
};

struct LabeledData {
    DataMatrix data;
    std::vector<std::string> names;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return out;
}

}  // namespace detail

/// Comma-separated table with one header row of unique names and a fully
/// numeric body. Matrix rows follow file order.
inline LabeledData parse_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw DataError("csv input is empty");
    }
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
        line.erase(0, 3);
    }
    std::vector<std::string> names;
    std::set<std::string> seen;
    for (auto cell : detail::split_commas(line)) {
        std::string name(cell);
        if (name.empty()) {
            throw ParseError(0, names.size() + 1, "empty header name");
        }
        if (!seen.insert(name).second) {
            throw DuplicateHeader(name);
        }
        names.push_back(std::move(name));
    }
    const std::size_t p = names.size();

    std::vector<double> cells;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) {
            continue;
        }
        ++row;
        const auto parts = detail::split_commas(line);
        if (parts.size() > p) {
            throw ParseError(row, p + 1, "more cells than header columns");
        }
        for (std::size_t c = 0; c < p; ++c) {
            if (c >= parts.size() || parts[c].empty()) {
                throw MissingValue(row, c + 1);
            }
            const auto cell = parts[c];
            double v = 0.0;
            const char* first = cell.data();
            if (!cell.empty() && cell.front() == '+') {
                ++first;
            }
            const auto [ptr, ec] = std::from_chars(first, cell.data() + cell.size(), v);
            if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
                throw ParseError(row, c + 1, "not a finite number: '" + std::string(cell) + "'");
            }
            cells.push_back(v);
        }
    }
    Matrix x(static_cast<Index>(row), static_cast<Index>(p));
    for (std::size_t r = 0; r < row; ++r) {
        for (std::size_t c = 0; c < p; ++c) {
            x(static_cast<Index>(r), static_cast<Index>(c)) = cells[r * p + c];
        }
    }
    return LabeledData{DataMatrix(std::move(x)), std::move(names)};
}

inline LabeledData load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    return parse_csv(in);
}

/// Column-wise z-scores: mean 0, sample variance 1 with denominator n - 1.
inline DataMatrix standardize(const DataMatrix& data) {
    const Matrix& x = data.values();
    Matrix out(x.rows(), x.cols());
    const double denom = static_cast<double>(x.rows() - 1);
    for (Index j = 0; j < x.cols(); ++j) {
        const double mean = x.col(j).mean();
        const Vector centered = x.col(j).array() - mean;
        const double var = centered.squaredNorm() / denom;
        const double scale = x.col(j).cwiseAbs().maxCoeff();
        if (!(var > 0.0) || std::sqrt(var) <= 1e-14 * scale) {
            throw ConstantColumn(j);
        }
        out.col(j) = centered / std::sqrt(var);
    }
    return DataMatrix(std::move(out));
}

/// x1 ... xp.
inline std::vector<std::string> default_names(Index p) {
    std::vector<std::string> out;
    for (Index j = 0; j < p; ++j) {
        out.push_back("x" + std::to_string(j + 1));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Graph output
// ---------------------------------------------------------------------------

namespace detail {

inline std::string dot_quote(const std::string& s) {
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"' || ch == '\\') {
            out += '\\';
        }
        out += ch;
    }
    return out + "\"";
}

}  // namespace detail

/// DOT digraph: one node per name, one edge per nonzero entry (k, j), orange
/// for positive and blue for negative coefficients, labelled with the value
/// rounded to three decimals.
inline void write_dot(std::ostream& out, const CoefMatrix& a, const std::vector<std::string>& names) {
    if (static_cast<Index>(names.size()) != a.p()) {
        throw std::invalid_argument("write_dot: need one name per node");
    }
    out << "digraph dag {\n";
    for (const auto& name : names) {
        out << "  " << detail::dot_quote(name) << ";\n";
    }
    const Dag support = support_dag(a);
    for (const auto& e : support.edges()) {
        const double v = a(e.parent, e.child);
        char label[64];
        std::snprintf(label, sizeof label, "%.3f", v);
        out << "  " << detail::dot_quote(names[static_cast<std::size_t>(e.parent)]) << " -> "
            << detail::dot_quote(names[static_cast<std::size_t>(e.child)]) << " [color=" << (v < 0.0 ? "blue" : "orange")
            << ", label=\"" << label << "\"];\n";
    }
    out << "}\n";
}

inline void export_dot(const CoefMatrix& a, const std::vector<std::string>& names, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    write_dot(out, a, names);
    if (!out) {
        throw std::runtime_error("write failed for " + path.string());
    }
}

struct DotEdge {
    std::string from;
    std::string to;
    std::string color;

    friend bool operator==(const DotEdge&, const DotEdge&) = default;
};

/// Reads back the edges written by write_dot.
inline std::vector<DotEdge> parse_dot_edges(std::istream& in) {
    static const std::regex edge_re(R"re(^\s*"((?:[^"\\]|\\.)*)"\s*->\s*"((?:[^"\\]|\\.)*)"(?:.*color=(\w+))?)re");
    auto unescape = [](const std::string& s) {
        std::string out;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] == '\\' && i + 1 < s.size()) {
                ++i;
            }
            out += s[i];
        }
        return out;
    };
    std::vector<DotEdge> edges;
    std::string line;
    while (std::getline(in, line)) {
        std::smatch m;
        if (std::regex_search(line, m, edge_re)) {
            edges.push_back({unescape(m[1]), unescape(m[2]), m[3]});
        }
    }
    return edges;
}

struct DegreeSummary {
    std::vector<Index> in_degree;
    std::vector<Index> out_degree;
    std::size_t num_edges = 0;
    /// 2 |E| / p: each edge counts once for both endpoints.
    double average_degree = 0.0;
};

inline DegreeSummary degree_summary(const CoefMatrix& a) {
    DegreeSummary out;
    const Index p = a.p();
    out.in_degree.assign(static_cast<std::size_t>(p), 0);
    out.out_degree.assign(static_cast<std::size_t>(p), 0);
    for (Index k = 0; k < p; ++k) {
        for (Index j = 0; j < p; ++j) {
            if (a(k, j) != 0.0) {
                ++out.out_degree[static_cast<std::size_t>(k)];
                ++out.in_degree[static_cast<std::size_t>(j)];
                ++out.num_edges;
            }
        }
    }
    out.average_degree = 2.0 * static_cast<double>(out.num_edges) / static_cast<double>(p);
    return out;
}

/// weights.csv: model_index,k,weight (model_index is 1-based).
inline void write_weights_csv(std::ostream& out, const Vector& k, const Vector& w) {
    out << "model_index,k,weight\n";
    for (Index m = 0; m < w.size(); ++m) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", w[m]);
        out << (m + 1) << ',' << static_cast<long long>(std::llround(k[m])) << ',' << buf << '\n';
    }
}

}  // namespace dagavg

#endif  // DAGAVG_IO_HPP

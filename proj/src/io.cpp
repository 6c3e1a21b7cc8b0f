#include "rcps/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace rcps {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, sep)) fields.push_back(field);
    if (!line.empty() && line.back() == sep) fields.emplace_back();
    return fields;
}

std::string strip(std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == '\n' || s.back() == ' ')) s.pop_back();
    std::size_t i = 0;
    while (i < s.size() && s[i] == ' ') ++i;
    return s.substr(i);
}

double parse_double(const std::string& raw, const std::string& context) {
    const std::string s = strip(raw);
    double v = 0.0;
    const auto* begin = s.data();
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc{} || ptr != end) {
        throw std::invalid_argument("cannot parse number '" + raw + "' in " + context);
    }
    return v;
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path);
    return in;
}

} // namespace

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

LossMatrix read_loss_matrix_csv(const std::string& path) {
    std::ifstream in = open_input(path);
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument(path + " is empty");

    LossMatrix m;
    for (const auto& f : split(strip(line), ',')) {
        m.grid.values.push_back(parse_double(f, path + " header"));
    }
    m.cols = m.grid.size();

    std::size_t row = 0;
    while (std::getline(in, line)) {
        const std::string clean = strip(line);
        if (clean.empty()) continue;
        const auto fields = split(clean, ',');
        if (fields.size() != m.cols) {
            throw std::invalid_argument(path + " row " + std::to_string(row) + " has " +
                                        std::to_string(fields.size()) + " fields, expected " +
                                        std::to_string(m.cols));
        }
        for (const auto& f : fields) {
            m.data.push_back(parse_double(f, path + " row " + std::to_string(row)));
        }
        ++row;
    }
    m.rows = row;
    validate_matrix(m);
    return m;
}

void write_loss_matrix_csv(const LossMatrix& matrix, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot write " + path);
    for (std::size_t j = 0; j < matrix.cols; ++j) {
        if (j > 0) out << ',';
        out << format_double(matrix.grid.values[j]);
    }
    out << '\n';
    for (std::size_t i = 0; i < matrix.rows; ++i) {
        for (std::size_t j = 0; j < matrix.cols; ++j) {
            if (j > 0) out << ',';
            out << format_double(matrix.at(i, j));
        }
        out << '\n';
    }
}

std::vector<double> read_loss_column(const std::string& path) {
    std::ifstream in = open_input(path);
    std::vector<double> out;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        const std::string clean = strip(line);
        if (clean.empty()) continue;
        out.push_back(parse_double(clean, path + " line " + std::to_string(row)));
        ++row;
    }
    if (out.empty()) throw std::invalid_argument(path + " holds no losses");
    return out;
}

LabelTree read_label_tree(const std::string& path) {
    std::ifstream in = open_input(path);
    std::string line;
    struct Row {
        int parent;
        std::string label;
    };
    std::map<int, Row> rows;
    while (std::getline(in, line)) {
        const std::string clean = strip(line);
        if (clean.empty()) continue;
        const auto fields = split(clean, ',');
        if (fields.size() != 3) {
            throw std::invalid_argument(path + ": expected 'id,parent_id,label_or_dash'");
        }
        const int id = static_cast<int>(parse_double(fields[0], path));
        const int parent = static_cast<int>(parse_double(fields[1], path));
        if (rows.count(id)) throw std::invalid_argument(path + ": duplicate node id");
        rows[id] = {parent, strip(fields[2])};
    }
    if (rows.empty()) throw std::invalid_argument(path + " holds no nodes");

    // Node ids must be 0..n-1 so they can double as vector indices.
    const int n = static_cast<int>(rows.size());
    std::vector<int> parent(static_cast<std::size_t>(n));
    std::map<int, int> label_to_leaf;
    for (const auto& [id, row] : rows) {
        if (id < 0 || id >= n) {
            throw std::invalid_argument(path + ": node ids must be 0..n-1");
        }
        parent[static_cast<std::size_t>(id)] = row.parent;
        if (row.label != "-") {
            const int label = static_cast<int>(parse_double(row.label, path));
            if (label_to_leaf.count(label)) {
                throw std::invalid_argument(path + ": duplicate label " + row.label);
            }
            label_to_leaf[label] = id;
        }
    }
    std::vector<int> leaf_of_label;
    int expected = 0;
    for (const auto& [label, leaf] : label_to_leaf) {
        if (label != expected) {
            throw std::invalid_argument(path + ": labels must be 0..K-1 without gaps");
        }
        leaf_of_label.push_back(leaf);
        ++expected;
    }
    return LabelTree::build(std::move(parent), std::move(leaf_of_label));
}

} // namespace rcps

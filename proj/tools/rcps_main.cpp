// Command-line front end: calibrate set-valued predictors from loss-matrix
// CSVs, invert single confidence bounds, build loss matrices for the bundled
// task families, and run the Monte Carlo bound-comparison experiments.
//
// Exit codes: 0 success, 2 calibration saturated (or conformal fallback
// warning), 1 any error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rcps/bounds.hpp"
#include "rcps/calibration.hpp"
#include "rcps/io.hpp"
#include "rcps/setfns.hpp"
#include "rcps/simlab.hpp"

namespace {

using nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitSaturated = 2;

void write_text(const std::string& text, const std::string& output_path) {
    if (output_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(output_path);
    if (!out) throw std::invalid_argument("cannot write " + output_path);
    out << text;
}

ordered_json json_number_or_null(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream ss(csv);
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

// "-1,-0.5,0" or a linspace "lin:lo:hi:count"
rcps::LambdaGrid parse_grid(const std::string& spec) {
    rcps::LambdaGrid grid;
    if (spec.rfind("lin:", 0) == 0) {
        std::vector<std::string> parts;
        std::string part;
        std::istringstream ss(spec.substr(4));
        while (std::getline(ss, part, ':')) parts.push_back(part);
        if (parts.size() != 3) throw std::invalid_argument("--grid lin form is lin:lo:hi:count");
        const double lo = std::stod(parts[0]);
        const double hi = std::stod(parts[1]);
        const int count = std::stoi(parts[2]);
        if (count < 2) throw std::invalid_argument("--grid needs at least 2 points");
        for (int j = 0; j < count; ++j) {
            grid.values.push_back(lo + (hi - lo) * static_cast<double>(j) /
                                           static_cast<double>(count - 1));
        }
    } else {
        for (const auto& item : split_list(spec)) grid.values.push_back(std::stod(item));
    }
    grid.validate();
    return grid;
}

std::map<std::string, double> parse_params(const std::string& spec) {
    std::map<std::string, double> out;
    for (const auto& item : split_list(spec)) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("--param entries look like name=value");
        }
        out[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
    }
    return out;
}

double take_param(std::map<std::string, double>& params, const std::string& name) {
    const auto it = params.find(name);
    if (it == params.end()) throw std::invalid_argument("missing --param " + name + "=...");
    const double v = it->second;
    params.erase(it);
    return v;
}

rcps::DistSpec parse_dist(const std::string& family, const std::string& param_spec) {
    auto params = parse_params(param_spec);
    rcps::DistSpec spec;
    if (family == "bernoulli") {
        spec = rcps::DistSpec::bernoulli(take_param(params, "mu"));
    } else if (family == "beta") {
        const double a = take_param(params, "a");
        spec = rcps::DistSpec::beta(a, take_param(params, "mu"));
    } else if (family == "gamma") {
        spec = rcps::DistSpec::gamma(take_param(params, "a"));
    } else if (family == "squared-t") {
        spec = rcps::DistSpec::squared_t(take_param(params, "v"));
    } else if (family == "lognormal") {
        const double mu = take_param(params, "mu");
        spec = rcps::DistSpec::lognormal(mu, take_param(params, "sigma"));
    } else {
        throw std::invalid_argument("unknown --dist family: " + family);
    }
    if (!params.empty()) {
        throw std::invalid_argument("unused --param entry: " + params.begin()->first);
    }
    return spec;
}

ordered_json bound_to_json(const rcps::BoundSpec& spec, bool cv_estimated) {
    ordered_json j;
    j["kind"] = std::string(rcps::bound_kind_name(spec.kind));
    j["delta"] = spec.delta;
    if (spec.cv) j["cv"] = *spec.cv;
    if (cv_estimated) j["cv_estimated"] = true;
    return j;
}

int cmd_calibrate(const std::string& input, double alpha, const rcps::BoundSpec& bound,
                  const std::string& output) {
    const rcps::LossMatrix matrix = rcps::read_loss_matrix_csv(input);
    const rcps::CalibrationReport report = rcps::calibrate_rcps(matrix, bound, alpha);

    ordered_json j;
    j["lambda_hat"] = report.lambda_hat;
    j["saturated"] = report.saturated;
    j["alpha"] = report.alpha;
    j["delta"] = report.delta;
    j["bound"] = bound_to_json(report.bound, report.cv_estimated);
    j["ucb_curve"] = ordered_json::array();
    for (double v : report.ucb_curve) j["ucb_curve"].push_back(json_number_or_null(v));
    j["risk_curve"] = report.risk_curve;
    j["relative_gap"] = json_number_or_null(report.relative_gap);
    write_text(j.dump(2) + "\n", output);
    return report.saturated ? kExitSaturated : kExitOk;
}

int cmd_conformal(const std::string& input, double alpha, const std::string& output) {
    const rcps::LossMatrix matrix = rcps::read_loss_matrix_csv(input);
    const auto scores = rcps::conformal_scores(matrix);
    const rcps::ConformalResult res = rcps::calibrate_conformal(scores, alpha, matrix.grid);

    ordered_json j;
    j["lambda_hat"] = res.lambda_hat;
    j["warning"] = res.warning;
    j["alpha"] = alpha;
    j["n"] = matrix.rows;
    j["order_stat_k"] = res.order_stat_k;
    write_text(j.dump(2) + "\n", output);
    return res.warning ? kExitSaturated : kExitOk;
}

int cmd_bound(const std::string& input, const rcps::BoundSpec& spec,
              std::optional<std::int64_t> ustat_n, const std::string& output) {
    const std::vector<double> losses = rcps::read_loss_column(input);
    const rcps::UCBValue ucb = rcps::compute_ucb(spec, losses, ustat_n);

    ordered_json j;
    j["bound"] = std::string(rcps::bound_kind_name(spec.kind));
    j["n"] = ustat_n ? *ustat_n : static_cast<std::int64_t>(losses.size());
    j["rhat"] = rcps::mean(losses);
    j["ucb"] = json_number_or_null(ucb.value);
    j["finite"] = ucb.finite;
    j["clamped"] = ucb.clamped;
    write_text(j.dump(2) + "\n", output);
    return kExitOk;
}

int cmd_simulate(const std::string& family, const std::string& param_spec,
                 const std::string& n_list, const std::string& bound_list, double delta,
                 std::int64_t reps, std::uint64_t seed, const std::string& output) {
    const rcps::DistSpec spec = parse_dist(family, param_spec);

    std::vector<std::size_t> sizes;
    for (const auto& item : split_list(n_list)) sizes.push_back(std::stoul(item));
    if (sizes.empty()) sizes = {100, 316, 1000, 3162, 10000};

    std::vector<rcps::BoundKind> bounds;
    if (bound_list.empty()) {
        if (spec.bounded()) {
            bounds = {rcps::BoundKind::SimpleHoeffding, rcps::BoundKind::HoeffdingBentkus,
                      rcps::BoundKind::EmpiricalBernstein, rcps::BoundKind::Wsr};
        } else {
            bounds = {rcps::BoundKind::PinelisUtev, rcps::BoundKind::Clt};
        }
    } else {
        for (const auto& item : split_list(bound_list)) {
            bounds.push_back(rcps::bound_kind_from_name(item));
        }
    }

    std::ostringstream csv;
    csv << "family,params,mu,n,delta,bound,reps,coverage,median_gap,mean_relative_gap,seed\n";
    for (std::size_t n : sizes) {
        const auto results = rcps::bound_eval_experiment(spec, n, delta, bounds, reps, seed);
        for (const auto& r : results) {
            csv << family << ',' << param_spec << ',' << rcps::format_double(spec.target_mean)
                << ',' << r.n << ',' << rcps::format_double(delta) << ','
                << rcps::bound_kind_name(r.bound) << ',' << r.reps << ','
                << rcps::format_double(r.coverage) << ',' << rcps::format_double(r.median_gap)
                << ',' << rcps::format_double(r.mean_relative_gap) << ',' << r.seed << '\n';
        }
    }
    write_text(csv.str(), output);
    return kExitOk;
}

// classification rows: "label,s0,s1,..."; multilabel rows: "l1;l2;...,s0,s1,..."
void read_score_rows(const std::string& path, bool multilabel,
                     std::vector<std::vector<double>>& scores,
                     std::vector<int>& labels, std::vector<std::vector<int>>& label_sets) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path);
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::string field;
        std::istringstream ss(line);
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() < 2) throw std::invalid_argument(path + ": rows need label and scores");
        if (multilabel) {
            std::vector<int> ys;
            std::string y;
            std::istringstream ys_stream(fields[0]);
            while (std::getline(ys_stream, y, ';')) ys.push_back(std::stoi(y));
            std::sort(ys.begin(), ys.end());
            label_sets.push_back(std::move(ys));
        } else {
            labels.push_back(std::stoi(fields[0]));
        }
        std::vector<double> row;
        for (std::size_t f = 1; f < fields.size(); ++f) row.push_back(std::stod(fields[f]));
        scores.push_back(std::move(row));
    }
    if (scores.empty()) throw std::invalid_argument(path + " holds no examples");
}

std::vector<double> read_weights(const std::string& path, std::size_t classes) {
    if (path.empty()) return std::vector<double>(classes, 1.0);
    const auto w = rcps::read_loss_column(path);
    if (w.size() != classes) {
        throw std::invalid_argument("--weights holds " + std::to_string(w.size()) +
                                    " entries for " + std::to_string(classes) + " classes");
    }
    return w;
}

int cmd_loss_matrix(const std::string& task, const std::string& input,
                    const std::string& weights_path, const std::string& tree_path,
                    const std::string& grid_spec, const std::string& output) {
    const rcps::LambdaGrid grid = parse_grid(grid_spec);
    rcps::LossMatrix matrix;

    if (task == "classification" || task == "multilabel") {
        std::vector<std::vector<double>> scores;
        std::vector<int> labels;
        std::vector<std::vector<int>> label_sets;
        read_score_rows(input, task == "multilabel", scores, labels, label_sets);
        if (task == "classification") {
            const auto weights = read_weights(weights_path, scores[0].size());
            matrix = rcps::classification_loss_matrix(scores, labels, weights, grid);
        } else {
            matrix = rcps::multilabel_loss_matrix(scores, label_sets, grid);
        }
    } else if (task == "hierarchical") {
        if (tree_path.empty()) throw std::invalid_argument("hierarchical task needs --tree");
        const rcps::LabelTree tree = rcps::read_label_tree(tree_path);
        std::vector<std::vector<double>> scores;
        std::vector<int> labels;
        std::vector<std::vector<int>> unused;
        read_score_rows(input, false, scores, labels, unused);
        matrix = rcps::hierarchical_loss_matrix(tree, scores, labels, grid);
    } else if (task == "segmentation") {
        std::ifstream in(input);
        if (!in) throw std::invalid_argument("cannot open " + input);
        const auto doc = nlohmann::json::parse(in);
        std::vector<rcps::ScoreGrid> scores;
        std::vector<rcps::BinaryMask> masks;
        for (const auto& ex : doc.at("examples")) {
            const auto& sc = ex.at("scores");
            rcps::ScoreGrid g;
            g.rows = sc.size();
            g.cols = sc.at(0).size();
            for (const auto& row : sc) {
                for (const auto& v : row) g.data.push_back(v.get<double>());
            }
            const auto& mk = ex.at("mask");
            rcps::BinaryMask m = rcps::BinaryMask::zeros(mk.size(), mk.at(0).size());
            std::size_t p = 0;
            for (const auto& row : mk) {
                for (const auto& v : row) m.data[p++] = v.get<int>() != 0 ? 1 : 0;
            }
            scores.push_back(std::move(g));
            masks.push_back(std::move(m));
        }
        matrix = rcps::segmentation_loss_matrix(scores, masks, grid);
    } else if (task == "distogram") {
        std::ifstream in(input);
        if (!in) throw std::invalid_argument("cannot open " + input);
        const auto doc = nlohmann::json::parse(in);
        const auto bins = doc.at("bins").get<std::vector<double>>();
        std::vector<rcps::Distogram> distograms;
        std::vector<std::vector<double>> truths;
        for (const auto& ex : doc.at("examples")) {
            rcps::Distogram d;
            d.bins = bins;
            const auto& mass = ex.at("mass");
            d.size = mass.size();
            for (const auto& row : mass) {
                for (const auto& cell : row) {
                    for (const auto& v : cell) d.mass.push_back(v.get<double>());
                }
            }
            std::vector<double> truth;
            for (const auto& row : ex.at("truth")) {
                for (const auto& v : row) truth.push_back(v.get<double>());
            }
            distograms.push_back(std::move(d));
            truths.push_back(std::move(truth));
        }
        matrix = rcps::distogram_loss_matrix(distograms, truths, grid);
    } else {
        throw std::invalid_argument("unknown --task: " + task);
    }

    if (output.empty()) throw std::invalid_argument("loss-matrix needs --output");
    rcps::write_loss_matrix_csv(matrix, output);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distribution-free risk calibration for set-valued predictors"};
    app.require_subcommand(1);

    std::string input;
    std::string output;
    std::string bound_name = "wsr";
    std::string task;
    std::string grid_spec;
    std::string weights_path;
    std::string tree_path;
    std::string dist_family;
    std::string param_spec;
    std::string n_list;
    std::string bound_list;
    double alpha = 0.1;
    double delta = 0.1;
    double cv = -1.0;
    std::int64_t reps = 1000;
    std::int64_t ustat_n = 0;
    std::uint64_t seed = 0;

    auto* calibrate = app.add_subcommand("calibrate", "Select lambda_hat from a loss-matrix CSV");
    calibrate->add_option("--input", input, "loss-matrix CSV")->required();
    calibrate->add_option("--alpha", alpha, "target risk level")->required();
    calibrate->add_option("--delta", delta, "confidence level")->required();
    calibrate->add_option("--bound", bound_name, "concentration bound");
    calibrate->add_option("--cv", cv, "coefficient-of-variation bound (pinelis-utev)");
    calibrate->add_option("--output", output, "report JSON path (stdout when absent)");

    auto* conformal = app.add_subcommand("conformal", "Split-conformal quantile baseline");
    conformal->add_option("--input", input, "loss-matrix CSV")->required();
    conformal->add_option("--alpha", alpha, "target risk level")->required();
    conformal->add_option("--output", output, "report JSON path (stdout when absent)");

    auto* bound = app.add_subcommand("bound", "Upper confidence bound for one loss sample");
    bound->add_option("--input", input, "one loss value per line")->required();
    bound->add_option("--bound", bound_name, "concentration bound")->required();
    bound->add_option("--delta", delta, "confidence level")->required();
    bound->add_option("--cv", cv, "coefficient-of-variation bound (pinelis-utev)");
    bound->add_option("--n", ustat_n, "base sample size for ustat-hbm pairwise losses");
    bound->add_option("--output", output, "JSON path (stdout when absent)");

    auto* simulate = app.add_subcommand("simulate", "Coverage and gap experiments");
    simulate->add_option("--dist", dist_family, "bernoulli|beta|gamma|squared-t|lognormal")
        ->required();
    simulate->add_option("--param", param_spec, "family parameters, e.g. a=1,mu=0.1")->required();
    simulate->add_option("--n", n_list, "comma list of sample sizes (default paper grid)");
    simulate->add_option("--bound", bound_list, "comma list of bounds (default per family)");
    simulate->add_option("--delta", delta, "confidence level");
    simulate->add_option("--reps", reps, "replicates per cell");
    simulate->add_option("--seed", seed, "base seed; replicate r uses seed+r");
    simulate->add_option("--output", output, "CSV path (stdout when absent)");

    auto* loss_matrix = app.add_subcommand("loss-matrix", "Build a loss-matrix CSV for a task");
    loss_matrix->add_option("--task", task,
                            "classification|multilabel|hierarchical|segmentation|distogram")
        ->required();
    loss_matrix->add_option("--input", input, "task input file")->required();
    loss_matrix->add_option("--weights", weights_path, "per-class losses (classification)");
    loss_matrix->add_option("--tree", tree_path, "label tree file (hierarchical)");
    loss_matrix->add_option("--grid", grid_spec, "lambda grid: comma list or lin:lo:hi:count")
        ->required();
    loss_matrix->add_option("--output", output, "loss-matrix CSV path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        rcps::BoundSpec spec;
        spec.kind = rcps::bound_kind_from_name(bound_name);
        spec.delta = delta;
        if (cv >= 0.0) spec.cv = cv;

        if (calibrate->parsed()) return cmd_calibrate(input, alpha, spec, output);
        if (conformal->parsed()) return cmd_conformal(input, alpha, output);
        if (bound->parsed()) {
            std::optional<std::int64_t> n_opt;
            if (ustat_n > 0) n_opt = ustat_n;
            return cmd_bound(input, spec, n_opt, output);
        }
        if (simulate->parsed()) {
            return cmd_simulate(dist_family, param_spec, n_list, bound_list, delta, reps, seed,
                                output);
        }
        if (loss_matrix->parsed()) {
            return cmd_loss_matrix(task, input, weights_path, tree_path, grid_spec, output);
        }
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
}

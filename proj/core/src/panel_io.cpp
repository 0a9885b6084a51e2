#include "epicausal/csv.hpp"
#include "epicausal/sir.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace epicausal {
namespace {

using nlohmann::json;

// JSON has no encoding for +-inf; theta carries -inf where a compartment
// hit zero, so non-finite entries round-trip through null.
json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index j = 0; j < m.rows(); ++j) {
        json row = json::array();
        for (Eigen::Index t = 0; t < m.cols(); ++t) {
            const double x = m(j, t);
            if (std::isfinite(x)) {
                row.push_back(x);
            } else {
                row.push_back(nullptr);
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows) {
    const auto J = static_cast<Eigen::Index>(rows.size());
    const auto T = J > 0 ? static_cast<Eigen::Index>(rows.at(0).size()) : 0;
    Eigen::MatrixXd m(J, T);
    for (Eigen::Index j = 0; j < J; ++j) {
        const json& row = rows.at(static_cast<std::size_t>(j));
        if (static_cast<Eigen::Index>(row.size()) != T) {
            throw std::runtime_error("truth.json: ragged matrix");
        }
        for (Eigen::Index t = 0; t < T; ++t) {
            const json& cell = row.at(static_cast<std::size_t>(t));
            m(j, t) = cell.is_null() ? -std::numeric_limits<double>::infinity()
                                     : cell.get<double>();
        }
    }
    return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

Eigen::VectorXd vector_from_json(const json& arr) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = arr.at(static_cast<std::size_t>(i)).get<double>();
    return v;
}

json beta_model_to_json(const BetaModel& b) {
    return json{{"alpha0", b.alpha0},
                {"alpha1", vector_to_json(b.alpha1)},
                {"alpha2", vector_to_json(b.alpha2)},
                {"delta1", b.delta1},
                {"delta2", b.delta2}};
}

BetaModel beta_model_from_json(const json& j) {
    BetaModel b;
    b.alpha0 = j.at("alpha0").get<double>();
    b.alpha1 = vector_from_json(j.at("alpha1"));
    b.alpha2 = vector_from_json(j.at("alpha2"));
    b.delta1 = j.at("delta1").get<double>();
    b.delta2 = j.at("delta2").get<double>();
    return b;
}

json config_to_json(const ScenarioConfig& c) {
    return json{{"rows", c.rows},
                {"cols", c.cols},
                {"T", c.T},
                {"population", c.population},
                {"gamma", c.gamma},
                {"phi", c.phi},
                {"rho_s", c.rho_s},
                {"rho_t", c.rho_t},
                {"rho_x", c.rho_x},
                {"beta", beta_model_to_json(c.beta)},
                {"p", c.p},
                {"lag", c.lag},
                {"tau", c.tau},
                {"initial_scale", c.initial_scale},
                {"seed", c.seed}};
}

ScenarioConfig config_from_json(const json& j) {
    ScenarioConfig c;
    c.rows = j.at("rows").get<int>();
    c.cols = j.at("cols").get<int>();
    c.T = j.at("T").get<int>();
    c.population = j.at("population").get<double>();
    c.gamma = j.at("gamma").get<double>();
    c.phi = j.at("phi").get<double>();
    c.rho_s = j.at("rho_s").get<double>();
    c.rho_t = j.at("rho_t").get<double>();
    c.rho_x = j.at("rho_x").get<double>();
    c.beta = beta_model_from_json(j.at("beta"));
    c.p = j.at("p").get<double>();
    c.lag = j.at("lag").get<int>();
    c.tau = j.at("tau").get<double>();
    c.initial_scale = j.at("initial_scale").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

int infer_zeroed_prefix(const Eigen::MatrixXi& y) {
    int prefix = 0;
    while (prefix < y.cols() && (y.col(prefix).array() == 0).all()) ++prefix;
    return prefix;
}

}  // namespace

void write_panel(const PanelDataset& data, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_matrix_csv(data.Y, dir / "Y.csv");
    write_matrix_csv(data.A, dir / "A.csv");
    for (const auto& [name, field] : data.X) {
        write_matrix_csv(field, dir / ("X_" + name + ".csv"));
    }
    write_vector_csv(data.N, "N", dir / "N.csv");
    write_adjacency_file(data.graph, dir / "graph.txt");
    if (data.truth) {
        const SimulationTruth& tr = *data.truth;
        json j;
        j["zeroed_prefix"] = data.zeroed_prefix;
        j["config"] = config_to_json(tr.config);
        j["beta_model"] = beta_model_to_json(tr.beta_model);
        j["S"] = matrix_to_json(tr.S);
        j["I"] = matrix_to_json(tr.I);
        j["R"] = matrix_to_json(tr.R);
        j["lambda"] = matrix_to_json(tr.lambda);
        j["theta"] = matrix_to_json(tr.theta);
        j["v"] = matrix_to_json(tr.v);
        j["beta"] = matrix_to_json(tr.beta);
        std::ofstream os(dir / "truth.json");
        if (!os) throw std::runtime_error("write_panel: cannot open truth.json");
        os << j.dump(1) << '\n';
        if (!os) throw std::runtime_error("write_panel: truth.json write failed");
    }
}

PanelDataset read_panel(const std::filesystem::path& dir) {
    PanelDataset data;
    data.Y = read_imatrix_csv(dir / "Y.csv");
    data.A = read_matrix_csv(dir / "A.csv");
    data.N = read_vector_csv(dir / "N.csv");
    data.graph = read_adjacency_file(dir / "graph.txt");
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        const std::string fname = entry.path().filename().string();
        if (fname.size() > 6 && fname.rfind("X_", 0) == 0 &&
            fname.substr(fname.size() - 4) == ".csv") {
            const std::string name = fname.substr(2, fname.size() - 6);
            data.X.emplace(name, read_matrix_csv(entry.path()));
        }
    }
    const auto truth_path = dir / "truth.json";
    if (std::filesystem::exists(truth_path)) {
        std::ifstream is(truth_path);
        if (!is) throw std::runtime_error("read_panel: cannot open truth.json");
        json j;
        is >> j;
        data.zeroed_prefix = j.at("zeroed_prefix").get<int>();
        SimulationTruth tr;
        tr.config = config_from_json(j.at("config"));
        tr.beta_model = beta_model_from_json(j.at("beta_model"));
        tr.S = matrix_from_json(j.at("S"));
        tr.I = matrix_from_json(j.at("I"));
        tr.R = matrix_from_json(j.at("R"));
        tr.lambda = matrix_from_json(j.at("lambda"));
        tr.theta = matrix_from_json(j.at("theta"));
        tr.v = matrix_from_json(j.at("v"));
        tr.beta = matrix_from_json(j.at("beta"));
        data.truth = std::move(tr);
    } else {
        data.zeroed_prefix = infer_zeroed_prefix(data.Y);
    }

    const Eigen::Index J = data.Y.rows();
    const Eigen::Index T = data.Y.cols();
    if (data.A.rows() != J || data.A.cols() != T || data.N.size() != J ||
        data.graph.n_nodes() != J) {
        throw std::runtime_error("read_panel: inconsistent dimensions in " + dir.string());
    }
    for (const auto& [name, field] : data.X) {
        if (field.rows() != J || field.cols() != T) {
            throw std::runtime_error("read_panel: covariate " + name + " has wrong shape");
        }
    }
    if ((data.Y.array() < 0).any()) {
        throw std::runtime_error("read_panel: negative counts in Y.csv");
    }
    return data;
}

}  // namespace epicausal

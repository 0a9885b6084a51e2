#include "epicausal/dataio.hpp"

#include "epicausal/csv.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace epicausal {

const std::array<const char*, kMobilityCategories> kMobilityCategoryNames = {
    "retail_recreation", "grocery_pharmacy", "transit", "workplace", "residential",
};

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<int> lines;  // source line of each row, for error context
};

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

CsvTable read_table(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error(path.string() + " is empty");
    CsvTable table;
    table.header = split_csv_line(strip_cr(line));
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        line = strip_cr(line);
        if (line.empty()) continue;
        auto row = split_csv_line(line);
        if (row.size() != table.header.size()) {
            throw std::runtime_error(path.string() + " line " + std::to_string(lineno) +
                                     ": expected " + std::to_string(table.header.size()) +
                                     " fields, got " + std::to_string(row.size()));
        }
        table.rows.push_back(std::move(row));
        table.lines.push_back(lineno);
    }
    return table;
}

int column_index(const CsvTable& table, const std::string& name,
                 const std::filesystem::path& path) {
    const auto it = std::find(table.header.begin(), table.header.end(), name);
    if (it == table.header.end()) {
        throw std::runtime_error(path.string() + ": missing column '" + name + "'");
    }
    return static_cast<int>(it - table.header.begin());
}

double parse_cell_double(const std::string& tok, const std::filesystem::path& path, int line) {
    try {
        std::size_t pos = 0;
        const double out = std::stod(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument("trailing characters");
        return out;
    } catch (const std::exception&) {
        throw std::runtime_error(path.string() + " line " + std::to_string(line) +
                                 ": bad number '" + tok + "'");
    }
}

long parse_cell_int(const std::string& tok, const std::filesystem::path& path, int line) {
    try {
        std::size_t pos = 0;
        const long out = std::stol(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument("trailing characters");
        return out;
    } catch (const std::exception&) {
        throw std::runtime_error(path.string() + " line " + std::to_string(line) +
                                 ": bad integer '" + tok + "'");
    }
}

}  // namespace

std::int64_t days_from_civil(int year, int month, int day) {
    year -= month <= 2;
    const std::int64_t era = (year >= 0 ? year : year - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(year - era * 400);
    const unsigned doy =
        (153u * static_cast<unsigned>(month + (month > 2 ? -3 : 9)) + 2u) / 5u +
        static_cast<unsigned>(day) - 1u;
    const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

CivilDate civil_from_days(std::int64_t days) {
    days += 719468;
    const std::int64_t era = (days >= 0 ? days : days - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(days - era * 146097);
    const unsigned yoe = (doe - doe / 1460u + doe / 36524u - doe / 146096u) / 365u;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365u * yoe + yoe / 4u - yoe / 100u);
    const unsigned mp = (5u * doy + 2u) / 153u;
    const unsigned d = doy - (153u * mp + 2u) / 5u + 1u;
    const unsigned m = mp < 10u ? mp + 3u : mp - 9u;
    CivilDate out;
    out.year = static_cast<int>(y + (m <= 2u));
    out.month = static_cast<int>(m);
    out.day = static_cast<int>(d);
    return out;
}

std::int64_t parse_date(const std::string& iso) {
    const auto bad = [&] {
        throw std::invalid_argument("expected date 'YYYY-MM-DD', got '" + iso + "'");
    };
    if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') bad();
    for (const int i : {0, 1, 2, 3, 5, 6, 8, 9}) {
        if (iso[i] < '0' || iso[i] > '9') bad();
    }
    const int year = std::stoi(iso.substr(0, 4));
    const int month = std::stoi(iso.substr(5, 2));
    const int day = std::stoi(iso.substr(8, 2));
    const std::int64_t serial = days_from_civil(year, month, day);
    const CivilDate back = civil_from_days(serial);
    if (back.year != year || back.month != month || back.day != day) bad();
    return serial;
}

std::string format_date(std::int64_t days) {
    const CivilDate d = civil_from_days(days);
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", d.year, d.month, d.day);
    return buf;
}

double great_circle_km(double lat1, double lon1, double lat2, double lon2) {
    constexpr double kEarthRadiusKm = 6371.0;
    constexpr double kRad = 3.14159265358979323846 / 180.0;
    const double s_lat = std::sin((lat2 - lat1) * kRad / 2.0);
    const double s_lon = std::sin((lon2 - lon1) * kRad / 2.0);
    const double a =
        s_lat * s_lat + std::cos(lat1 * kRad) * std::cos(lat2 * kRad) * s_lon * s_lon;
    return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(a)));
}

Eigen::MatrixXd aggregate_mobility(const MobilityPanel& panel) {
    const int J = panel.n_counties();
    const int D = panel.n_days();
    for (const auto& cat : panel.categories) {
        if (cat.rows() != J || cat.cols() != D) {
            throw std::invalid_argument("aggregate_mobility: category shape mismatch");
        }
    }
    Eigen::MatrixXd a = Eigen::MatrixXd::Constant(J, D, kNaN);
    for (int j = 0; j < J; ++j) {
        for (int d = 0; d < D; ++d) {
            double sum = 0.0;
            int present = 0;
            for (int c = 0; c < kMobilityCategories; ++c) {
                const double v = panel.categories[c](j, d);
                if (std::isnan(v)) continue;
                sum += c == kMobilityCategories - 1 ? -v : v;  // residential is inverted
                ++present;
            }
            if (present > 0) a(j, d) = sum / present;
        }
    }
    return a;
}

Eigen::MatrixXd impute_missing(const Eigen::MatrixXd& values, const AdjacencyGraph& graph,
                               const Eigen::VectorXd& lat, const Eigen::VectorXd& lon,
                               ImputationReport* report) {
    const int J = static_cast<int>(values.rows());
    const int D = static_cast<int>(values.cols());
    if (graph.n_nodes() != J || lat.size() != J || lon.size() != J) {
        throw std::invalid_argument("impute_missing: inputs disagree about county count");
    }

    // Candidate donors per county: first degree, then neighbors-of-neighbors
    // excluding self and first degree. Distances are fixed across days.
    std::vector<std::vector<std::pair<int, double>>> donors(J);
    for (int j = 0; j < J; ++j) {
        std::set<int> first;
        for (const int k : graph.neighbors(j)) {
            if (k != j) first.insert(k);
        }
        std::set<int> second;
        for (const int k : first) {
            for (const int m : graph.neighbors(k)) {
                if (m != j && first.count(m) == 0) second.insert(m);
            }
        }
        for (const int k : first) {
            donors[j].emplace_back(k, great_circle_km(lat(j), lon(j), lat(k), lon(k)));
        }
        for (const int k : second) {
            donors[j].emplace_back(k, great_circle_km(lat(j), lon(j), lat(k), lon(k)));
        }
    }

    Eigen::MatrixXd out = values;
    for (int j = 0; j < J; ++j) {
        for (int d = 0; d < D; ++d) {
            if (!std::isnan(values(j, d))) continue;
            double min_positive = std::numeric_limits<double>::infinity();
            int with_value = 0;
            for (const auto& [k, dist] : donors[j]) {
                if (std::isnan(values(k, d))) continue;
                ++with_value;
                if (dist > 0.0) min_positive = std::min(min_positive, dist);
            }
            if (with_value == 0) {
                if (report) report->unfilled.emplace_back(j, d);
                continue;
            }
            double wsum = 0.0;
            double vsum = 0.0;
            for (const auto& [k, dist] : donors[j]) {
                const double v = values(k, d);
                if (std::isnan(v)) continue;
                double effective = dist;
                if (effective <= 0.0) {
                    if (report) ++report->zero_distance_donors;
                    // All donors at distance zero: fall back to equal weights.
                    effective = std::isfinite(min_positive) ? min_positive : 1.0;
                }
                const double w = 1.0 / effective;
                wsum += w;
                vsum += w * v;
            }
            out(j, d) = vsum / wsum;
            if (report) ++report->filled;
        }
    }
    return out;
}

Eigen::MatrixXi difference_cases(const Eigen::MatrixXi& cumulative, int* clamped) {
    const int J = static_cast<int>(cumulative.rows());
    const int D = static_cast<int>(cumulative.cols());
    Eigen::MatrixXi out(J, std::max(0, D - 1));
    for (int j = 0; j < J; ++j) {
        for (int d = 1; d < D; ++d) {
            const int diff = cumulative(j, d) - cumulative(j, d - 1);
            if (diff < 0 && clamped) ++*clamped;
            out(j, d - 1) = std::max(0, diff);
        }
    }
    return out;
}

WeeklyPanel weekly_rollup(const Eigen::MatrixXd& daily_a, const Eigen::MatrixXi& cumulative,
                          std::int64_t start_day, std::int64_t anchor) {
    const int J = static_cast<int>(daily_a.rows());
    const int D = static_cast<int>(daily_a.cols());
    if (cumulative.rows() != J || cumulative.cols() != D) {
        throw std::invalid_argument("weekly_rollup: daily panels disagree in shape");
    }

    // First anchored week whose 7 days all carry mobility and a case diff
    // (diffs start one day after coverage begins).
    std::int64_t k0 = 0;
    if (start_day + 1 > anchor) k0 = (start_day + 1 - anchor + 6) / 7;
    const std::int64_t week1 = anchor + 7 * k0;
    const std::int64_t last_day = start_day + D - 1;
    const int weeks = week1 + 6 > last_day
                          ? 0
                          : static_cast<int>((last_day - (week1 + 6)) / 7) + 1;
    if (weeks <= 0) {
        throw std::runtime_error(
            "weekly_rollup: no fully covered week; coverage must begin at least one day "
            "before an anchored week and span 7 days of it");
    }

    WeeklyPanel out;
    out.week1_start = week1;
    out.A.resize(J, weeks);
    out.Y.resize(J, weeks);
    for (int w = 0; w < weeks; ++w) {
        const int offset = static_cast<int>(week1 + 7 * w - start_day);
        for (int j = 0; j < J; ++j) {
            double a_sum = 0.0;
            int y_sum = 0;
            for (int d = offset; d < offset + 7; ++d) {
                const double a = daily_a(j, d);
                if (std::isnan(a)) {
                    throw std::runtime_error("weekly_rollup: county " + std::to_string(j) +
                                             " has no mobility value on " +
                                             format_date(start_day + d) +
                                             " inside a counted week");
                }
                a_sum += a;
                const int diff = cumulative(j, d) - cumulative(j, d - 1);
                if (diff < 0) ++out.clamped;
                y_sum += std::max(0, diff);
            }
            out.A(j, w) = a_sum / 7.0;
            out.Y(j, w) = y_sum;
        }
    }
    return out;
}

namespace {

struct Roster {
    std::vector<std::string> counties;
    std::map<std::string, int> index;
};

int roster_index(const Roster& roster, const std::string& county,
                 const std::filesystem::path& path, int line) {
    const auto it = roster.index.find(county);
    if (it == roster.index.end()) {
        throw std::runtime_error(path.string() + " line " + std::to_string(line) +
                                 ": unknown county '" + county + "'");
    }
    return it->second;
}

}  // namespace

PanelDataset ingest_panel(const IngestPaths& paths, const IngestOptions& options,
                          IngestReport* report) {
    // County roster and covariates.
    const CsvTable cov = read_table(paths.covariates);
    if (cov.header.empty() || cov.header[0] != "county") {
        throw std::runtime_error(paths.covariates.string() + ": first column must be 'county'");
    }
    const int pop_col = column_index(cov, "population", paths.covariates);
    {
        std::set<std::string> names(cov.header.begin(), cov.header.end());
        if (names.size() != cov.header.size()) {
            throw std::runtime_error(paths.covariates.string() + ": duplicate column names");
        }
    }
    Roster roster;
    for (std::size_t r = 0; r < cov.rows.size(); ++r) {
        const std::string& name = cov.rows[r][0];
        if (!roster.index.emplace(name, static_cast<int>(r)).second) {
            throw std::runtime_error(paths.covariates.string() + " line " +
                                     std::to_string(cov.lines[r]) + ": duplicate county '" +
                                     name + "'");
        }
        roster.counties.push_back(name);
    }
    const int J = static_cast<int>(roster.counties.size());
    if (J == 0) throw std::runtime_error(paths.covariates.string() + ": no counties");

    Eigen::VectorXd population(J);
    std::vector<std::pair<std::string, Eigen::VectorXd>> covariates;
    for (std::size_t c = 1; c < cov.header.size(); ++c) {
        if (static_cast<int>(c) != pop_col) covariates.emplace_back(cov.header[c], Eigen::VectorXd(J));
    }
    for (int r = 0; r < J; ++r) {
        population(r) = parse_cell_double(cov.rows[r][pop_col], paths.covariates, cov.lines[r]);
        std::size_t slot = 0;
        for (std::size_t c = 1; c < cov.header.size(); ++c) {
            if (static_cast<int>(c) == pop_col) continue;
            covariates[slot++].second(r) =
                parse_cell_double(cov.rows[r][c], paths.covariates, cov.lines[r]);
        }
    }

    // Centroids, matched by county name.
    const CsvTable cen = read_table(paths.centroids);
    const int cen_lat = column_index(cen, "lat", paths.centroids);
    const int cen_lon = column_index(cen, "lon", paths.centroids);
    const int cen_county = column_index(cen, "county", paths.centroids);
    Eigen::VectorXd lat = Eigen::VectorXd::Constant(J, kNaN);
    Eigen::VectorXd lon = Eigen::VectorXd::Constant(J, kNaN);
    for (std::size_t r = 0; r < cen.rows.size(); ++r) {
        const int j = roster_index(roster, cen.rows[r][cen_county], paths.centroids, cen.lines[r]);
        lat(j) = parse_cell_double(cen.rows[r][cen_lat], paths.centroids, cen.lines[r]);
        lon(j) = parse_cell_double(cen.rows[r][cen_lon], paths.centroids, cen.lines[r]);
    }
    for (int j = 0; j < J; ++j) {
        if (std::isnan(lat(j)) || std::isnan(lon(j))) {
            throw std::runtime_error(paths.centroids.string() + ": missing county '" +
                                     roster.counties[j] + "'");
        }
    }

    const AdjacencyGraph graph = read_adjacency_file(paths.adjacency);
    if (graph.n_nodes() != J) {
        throw std::runtime_error(paths.adjacency.string() + ": expected " + std::to_string(J) +
                                 " nodes, got " + std::to_string(graph.n_nodes()));
    }

    // Cases and mobility rows; date range defaults to the span both cover.
    const CsvTable cases = read_table(paths.cases);
    const int case_county = column_index(cases, "county", paths.cases);
    const int case_date = column_index(cases, "date", paths.cases);
    const int case_value = column_index(cases, "cumulative_cases", paths.cases);
    if (cases.rows.empty()) throw std::runtime_error(paths.cases.string() + ": no data rows");

    const CsvTable mob = read_table(paths.mobility);
    const int mob_county = column_index(mob, "county", paths.mobility);
    const int mob_date = column_index(mob, "date", paths.mobility);
    std::array<int, kMobilityCategories> mob_cols;
    for (int c = 0; c < kMobilityCategories; ++c) {
        mob_cols[c] = column_index(mob, kMobilityCategoryNames[c], paths.mobility);
    }
    if (mob.rows.empty()) throw std::runtime_error(paths.mobility.string() + ": no data rows");

    const auto date_span = [](const CsvTable& table, int date_col,
                              const std::filesystem::path& path) {
        std::int64_t lo = std::numeric_limits<std::int64_t>::max();
        std::int64_t hi = std::numeric_limits<std::int64_t>::min();
        for (std::size_t r = 0; r < table.rows.size(); ++r) {
            std::int64_t day = 0;
            try {
                day = parse_date(table.rows[r][date_col]);
            } catch (const std::exception& e) {
                throw std::runtime_error(path.string() + " line " +
                                         std::to_string(table.lines[r]) + ": " + e.what());
            }
            lo = std::min(lo, day);
            hi = std::max(hi, day);
        }
        return std::pair<std::int64_t, std::int64_t>(lo, hi);
    };
    const auto [cases_lo, cases_hi] = date_span(cases, case_date, paths.cases);
    const auto [mob_lo, mob_hi] = date_span(mob, mob_date, paths.mobility);

    const std::int64_t start = options.start_date.empty() ? std::max(cases_lo, mob_lo)
                                                          : parse_date(options.start_date);
    const std::int64_t end =
        options.end_date.empty() ? std::min(cases_hi, mob_hi) : parse_date(options.end_date);
    if (start > end) {
        throw std::runtime_error("ingest: start date " + format_date(start) +
                                 " is after end date " + format_date(end));
    }
    const int D = static_cast<int>(end - start + 1);

    // Cumulative cases with carry-forward; reports before the window seed
    // the starting level so the first in-window diff stays meaningful.
    Eigen::MatrixXi reported = Eigen::MatrixXi::Constant(J, D, -1);
    std::vector<std::pair<std::int64_t, long>> before(static_cast<std::size_t>(J),
                                                      {std::numeric_limits<std::int64_t>::min(), 0});
    std::set<std::pair<int, std::int64_t>> seen_case_cells;
    for (std::size_t r = 0; r < cases.rows.size(); ++r) {
        const int j = roster_index(roster, cases.rows[r][case_county], paths.cases, cases.lines[r]);
        const std::int64_t day = parse_date(cases.rows[r][case_date]);
        if (!seen_case_cells.emplace(j, day).second) {
            throw std::runtime_error(paths.cases.string() + " line " +
                                     std::to_string(cases.lines[r]) + ": duplicate entry for '" +
                                     roster.counties[j] + "' on " + format_date(day));
        }
        const long value = parse_cell_int(cases.rows[r][case_value], paths.cases, cases.lines[r]);
        if (day < start) {
            if (day > before[j].first) before[j] = {day, value};
            continue;
        }
        if (day > end) continue;
        reported(j, static_cast<int>(day - start)) = static_cast<int>(value);
    }
    Eigen::MatrixXi cumulative(J, D);
    for (int j = 0; j < J; ++j) {
        int last = static_cast<int>(before[j].second);
        for (int d = 0; d < D; ++d) {
            if (reported(j, d) >= 0) last = reported(j, d);
            cumulative(j, d) = last;
        }
    }

    MobilityPanel panel;
    panel.counties = roster.counties;
    panel.start_day = start;
    panel.lat = lat;
    panel.lon = lon;
    for (auto& cat : panel.categories) cat = Eigen::MatrixXd::Constant(J, D, kNaN);
    std::set<std::pair<int, std::int64_t>> seen_mob_cells;
    for (std::size_t r = 0; r < mob.rows.size(); ++r) {
        const int j = roster_index(roster, mob.rows[r][mob_county], paths.mobility, mob.lines[r]);
        const std::int64_t day = parse_date(mob.rows[r][mob_date]);
        if (day < start || day > end) continue;
        if (!seen_mob_cells.emplace(j, day).second) {
            throw std::runtime_error(paths.mobility.string() + " line " +
                                     std::to_string(mob.lines[r]) + ": duplicate entry for '" +
                                     roster.counties[j] + "' on " + format_date(day));
        }
        for (int c = 0; c < kMobilityCategories; ++c) {
            const std::string& tok = mob.rows[r][mob_cols[c]];
            if (tok.empty()) continue;
            panel.categories[c](j, static_cast<int>(day - start)) =
                parse_cell_double(tok, paths.mobility, mob.lines[r]);
        }
    }

    ImputationReport imputation;
    const Eigen::MatrixXd daily_a =
        impute_missing(aggregate_mobility(panel), graph, lat, lon, &imputation);
    const WeeklyPanel weekly = weekly_rollup(daily_a, cumulative, start, parse_date(options.week_anchor));

    PanelDataset data;
    data.graph = graph;
    data.Y = weekly.Y;
    data.A = weekly.A;
    data.N = population;
    data.zeroed_prefix = 0;
    const int W = static_cast<int>(weekly.Y.cols());
    for (const auto& [name, column] : covariates) {
        data.X[name] = column.replicate(1, W);
    }

    if (report) {
        report->imputation = imputation;
        report->clamped = weekly.clamped;
        report->n_weeks = W;
        report->week1_start = format_date(weekly.week1_start);
    }
    return data;
}

ApplicationRun build_application_run(const PanelDataset& data, int lag, ModelVariant variant) {
    ApplicationRun run;
    run.variant = variant;
    run.propensity = PropensityDesign::application();
    run.fit.window_start = 8;
    run.fit.lag = lag;
    run.fit.latent_thin = 0;
    if (variant == ModelVariant::Full) {
        run.fit.iterations = 200000;
        run.fit.burn_in = 40000;
    } else {
        run.fit.iterations = 100000;
        run.fit.burn_in = 20000;
    }
    const int ps_valid_from = variant == ModelVariant::NoPS ? 0 : run.propensity.max_lag();
    run.fit.validate(data.n_weeks(), ps_valid_from);
    return run;
}

}  // namespace epicausal

#pragma once

#include "epicausal/graph.hpp"
#include "epicausal/inference.hpp"
#include "epicausal/propensity.hpp"
#include "epicausal/sir.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace epicausal {

/// Serial day number, 1970-01-01 = day 0, proleptic Gregorian.
struct CivilDate {
    int year = 1970;
    int month = 1;
    int day = 1;
};

std::int64_t days_from_civil(int year, int month, int day);
CivilDate civil_from_days(std::int64_t days);

/// Strict `YYYY-MM-DD`; rejects malformed text and impossible dates.
std::int64_t parse_date(const std::string& iso);
std::string format_date(std::int64_t days);

/// Haversine distance between two (degree) coordinates, radius 6371 km.
double great_circle_km(double lat1, double lon1, double lat2, double lon2);

inline constexpr int kMobilityCategories = 5;

/// Category order used everywhere: file columns, the `categories` array and
/// the aggregate. Residential enters the aggregate with a negative sign.
extern const std::array<const char*, kMobilityCategories> kMobilityCategoryNames;

/// Daily percent-change-from-baseline mobility series plus the county
/// centroids used for distance-weighted imputation. Each category matrix is
/// J x D with NaN marking a missing observation; column d is calendar day
/// start_day + d.
struct MobilityPanel {
    std::vector<std::string> counties;
    std::int64_t start_day = 0;
    std::array<Eigen::MatrixXd, kMobilityCategories> categories;
    Eigen::VectorXd lat;
    Eigen::VectorXd lon;

    int n_counties() const { return static_cast<int>(counties.size()); }
    int n_days() const {
        return categories[0].size() == 0 ? 0 : static_cast<int>(categories[0].cols());
    }
};

/// A = mean of the available signed categories {retail, grocery, transit,
/// workplace, -residential}; NaN where all five are missing.
Eigen::MatrixXd aggregate_mobility(const MobilityPanel& panel);

struct ImputationReport {
    int filled = 0;
    int zero_distance_donors = 0;                  // identical centroids seen
    std::vector<std::pair<int, int>> unfilled;     // (county, day) still missing
};

/// Fills each missing cell with the 1/distance-weighted mean of the same-day
/// values of first- and second-degree neighbors (weights normalized to sum
/// 1). Donors are read from the input matrix only, so the fill order does
/// not matter and imputed values are never donors. A donor at distance zero
/// counts as the smallest positive donor distance for that cell. Cells with
/// no donor stay NaN and are listed in the report.
Eigen::MatrixXd impute_missing(const Eigen::MatrixXd& values, const AdjacencyGraph& graph,
                               const Eigen::VectorXd& lat, const Eigen::VectorXd& lon,
                               ImputationReport* report = nullptr);

/// Daily new cases from a cumulative series: max(0, cum(d) - cum(d-1)) for
/// d >= 1, J x (D-1). The first day seeds the differencing and produces no
/// output column. Negative corrections clamp to 0; *clamped counts them.
Eigen::MatrixXi difference_cases(const Eigen::MatrixXi& cumulative, int* clamped = nullptr);

struct WeeklyPanel {
    Eigen::MatrixXd A;             // J x W, mean of daily A
    Eigen::MatrixXi Y;             // J x W, summed daily new cases
    std::int64_t week1_start = 0;  // serial day of the first counted week
    int clamped = 0;               // negative corrections inside counted weeks
};

/// Rolls daily panels into the study's week grid. Weeks start on the
/// anchor's calendar day and every 7 days after it; a week is counted when
/// all 7 days carry mobility and differenced cases, so coverage must begin
/// at least one day before the first counted week. Counted weeks must be
/// fully imputed (NaN inside one throws). Throws when no week qualifies.
WeeklyPanel weekly_rollup(const Eigen::MatrixXd& daily_a, const Eigen::MatrixXi& cumulative,
                          std::int64_t start_day, std::int64_t anchor);

/// Input files. All are comma-delimited with a header row:
///   cases:      county,date,cumulative_cases         (one row per county/day)
///   mobility:   county,date,<the five categories>    (empty field = missing)
///   covariates: county,population,<one column per covariate>
///   centroids:  county,lat,lon
///   adjacency:  the graph module's adjacency text, rows in covariate order
/// The covariates file fixes the county order; every other file must cover
/// exactly that roster.
struct IngestPaths {
    std::filesystem::path cases;
    std::filesystem::path mobility;
    std::filesystem::path covariates;
    std::filesystem::path centroids;
    std::filesystem::path adjacency;
};

struct IngestOptions {
    std::string start_date;  // inclusive; empty = first day both series cover
    std::string end_date;    // inclusive; empty = last day both series cover
    std::string week_anchor = "2020-03-06";
};

struct IngestReport {
    ImputationReport imputation;
    int clamped = 0;
    int n_weeks = 0;
    std::string week1_start;
};

/// Full ingestion pipeline: aggregate -> impute -> weekly rollup -> panel.
/// Cases gaps carry the last cumulative value forward (0 before the first
/// report); mobility gaps go through imputation. Covariates become
/// constant-over-week X panels; `population` is required and becomes N.
PanelDataset ingest_panel(const IngestPaths& paths, const IngestOptions& options,
                          IngestReport* report = nullptr);

/// Fitting configuration of the application analysis: window weeks 8..T,
/// the application propensity design, and 100,000/20,000 iterations
/// (200,000/40,000 for the Full variant, which mixes more slowly). Latent
/// storage is off by default at application scale. Throws when the window
/// cannot accommodate the lag (propensity variants need lag <= 6).
struct ApplicationRun {
    ModelVariant variant = ModelVariant::Full;
    PropensityDesign propensity;
    FitConfig fit;
};

ApplicationRun build_application_run(const PanelDataset& data, int lag, ModelVariant variant);

}  // namespace epicausal

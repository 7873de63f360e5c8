#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace nigam::ingest {

enum class SourceKind { Proxy, TideGauge };

const char* to_string(SourceKind kind);
SourceKind source_from_string(const std::string& text);

// One relative-sea-level datum. Ages in years CE, heights in metres.
struct Observation {
    int site_id = 0;
    double age = 0.0;
    double age_sd = 0.0;
    double rsl = 0.0;
    double rsl_sd = 0.0;
    SourceKind source = SourceKind::Proxy;
};

struct Site {
    std::string name;
    double lon = 0.0;
    double lat = 0.0;
    SourceKind source = SourceKind::Proxy;
    double slope_prior_mean = 0.0; // m/yr
    double slope_prior_sd = 0.0;   // m/yr
};

// Sites indexed 0..m-1; the index is the site_id carried by observations.
class SiteRegistry {
public:
    SiteRegistry() = default;
    explicit SiteRegistry(std::vector<Site> sites);

    std::size_t size() const { return sites_.size(); }
    bool empty() const { return sites_.empty(); }
    const Site& operator[](std::size_t j) const { return sites_[j]; }
    const std::vector<Site>& sites() const { return sites_; }
    std::optional<int> find(const std::string& name) const;

    // Checks coordinates ranges and positive slope prior sds.
    void validate() const;

private:
    std::vector<Site> sites_;
};

struct Dataset {
    std::vector<Observation> observations;
    SiteRegistry sites;
    std::vector<std::string> warnings;

    void validate() const;
};

// Annual tide-gauge record for one station.
struct GaugeSeries {
    std::string name;
    double lon = 0.0;
    double lat = 0.0;
    std::vector<int> years;
    std::vector<double> values; // metres
    std::optional<double> slope_prior_mean; // m/yr
    std::optional<double> slope_prior_sd;   // m/yr

    int record_length() const { return years.empty() ? 0 : years.back() - years.front() + 1; }
};

struct IngestOptions {
    double rsl_sd_floor = 0.01;           // m, replaces a zero decadal sd
    double gauge_slope_prior_sd = 0.0003; // m/yr, used when the gauge file has no sd column
    int datum_first_year = 2000;
    int datum_last_year = 2018;
    double long_record_years = 150.0;
    double near_record_years = 20.0;
    double near_distance_deg = 1.0;
    double pre_industrial_cutoff = 1800.0;
};

// Great-circle distance in degrees of arc (haversine).
double great_circle_degrees(double lon1, double lat1, double lon2, double lat2);

struct ProxyRecord {
    std::string site_name;
    double lon = 0.0, lat = 0.0;
    Observation obs;
    std::optional<double> slope_prior_mean; // m/yr
    std::optional<double> slope_prior_sd;   // m/yr
    std::size_t line = 0;
};

std::vector<ProxyRecord> read_proxy_csv(const std::string& path);
std::vector<GaugeSeries> read_gauge_csv(const std::string& path);

// Keeps a series if it spans more than 150 years, is the nearest gauge to
// some proxy site, or lies within 1 degree of a proxy site and spans more
// than 20 years. Empty series are dropped with a warning.
std::vector<GaugeSeries> filter_tide_gauges(const std::vector<GaugeSeries>& annual, const SiteRegistry& proxy_sites,
                                            const IngestOptions& options = {},
                                            std::vector<std::string>* warnings = nullptr);

// Subtracts the series mean over the datum window (2000-2018 CE by default).
GaugeSeries reference_to_datum(const GaugeSeries& series, const IngestOptions& options = {});

// One observation per calendar decade [10k, 10k+10) holding data: age at the
// decade midpoint with sd 5 yr, rsl the decadal mean with its sample sd.
std::vector<Observation> decadal_average(const GaugeSeries& series, int site_id, const IngestOptions& options = {});

struct SlopePrior {
    double mean = 0.0; // m/yr
    double sd = 0.0;   // m/yr
};

// Unweighted least-squares rate over observations older than 1800 CE and
// its standard error. Needs at least 3 such points.
SlopePrior empirical_slope_prior(std::span<const Observation> site_obs, const IngestOptions& options = {});

// Full ingest: proxies, then filtered, datum-referenced, decadally averaged
// gauges. Sites are ordered lexicographically by name. gauge_csv may be empty.
Dataset load_observations(const std::string& proxy_csv, const std::string& gauge_csv,
                          const IngestOptions& options = {});

// Observation table: site_id, site_name, lon, lat, source, age_ce, age_sd_yr, rsl_m, rsl_sd_m
void write_observation_table(const Dataset& data, std::ostream& out);
// Site table: site_id, site_name, lon, lat, source, slope_prior_mean_mm_yr, slope_prior_sd_mm_yr
void write_site_table(const SiteRegistry& sites, std::ostream& out);
// Inverse of the two writers above.
Dataset read_dataset_tables(const std::string& observations_csv, const std::string& sites_csv);

// Proxy-format export (the schema read_proxy_csv consumes).
void write_proxy_csv(const Dataset& data, std::ostream& out);

} // namespace nigam::ingest

#include "nigam/ingest.hpp"

#include "nigam/csv.hpp"
#include "nigam/error.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>

namespace nigam::ingest {

const char* to_string(SourceKind kind) {
    return kind == SourceKind::Proxy ? "proxy" : "tide_gauge";
}

SourceKind source_from_string(const std::string& text) {
    if (text == "proxy") return SourceKind::Proxy;
    if (text == "tide_gauge") return SourceKind::TideGauge;
    throw InputError("unknown source kind '" + text + "'");
}

SiteRegistry::SiteRegistry(std::vector<Site> sites) : sites_(std::move(sites)) {}

std::optional<int> SiteRegistry::find(const std::string& name) const {
    for (std::size_t j = 0; j < sites_.size(); ++j)
        if (sites_[j].name == name) return static_cast<int>(j);
    return std::nullopt;
}

void SiteRegistry::validate() const {
    for (const auto& s : sites_) {
        if (!(s.lat >= -90.0 && s.lat <= 90.0) || !(s.lon >= -180.0 && s.lon <= 180.0))
            throw InputError("site '" + s.name + "' has coordinates outside [-180,180] x [-90,90]");
        if (!(s.slope_prior_sd > 0.0) || !std::isfinite(s.slope_prior_mean))
            throw InputError("site '" + s.name + "' needs a finite slope prior mean and a positive sd");
    }
}

void Dataset::validate() const {
    sites.validate();
    for (std::size_t i = 0; i < observations.size(); ++i) {
        const auto& o = observations[i];
        if (o.site_id < 0 || static_cast<std::size_t>(o.site_id) >= sites.size())
            throw InputError("observation " + std::to_string(i) + " references an unknown site");
        if (!(o.age_sd >= 0.0) || !(o.rsl_sd >= 0.0))
            throw InputError("observation " + std::to_string(i) + " has a negative standard deviation");
        if (!std::isfinite(o.age) || !std::isfinite(o.rsl))
            throw InputError("observation " + std::to_string(i) + " is not finite");
    }
}

double great_circle_degrees(double lon1, double lat1, double lon2, double lat2) {
    constexpr double rad = std::numbers::pi / 180.0;
    const double dlat = (lat2 - lat1) * rad;
    const double dlon = (lon2 - lon1) * rad;
    const double a = std::sin(dlat / 2) * std::sin(dlat / 2) +
                     std::cos(lat1 * rad) * std::cos(lat2 * rad) * std::sin(dlon / 2) * std::sin(dlon / 2);
    return 2.0 * std::asin(std::min(1.0, std::sqrt(a))) / rad;
}

namespace {

bool file_is_blank(const std::string& path) {
    std::error_code ec;
    return std::filesystem::exists(path, ec) && std::filesystem::file_size(path, ec) == 0;
}

void check_coordinates(const csv::Table& t, std::size_t row, std::size_t lon_col, std::size_t lat_col) {
    const double lon = t.number(row, lon_col);
    const double lat = t.number(row, lat_col);
    std::ostringstream msg;
    if (lon < -180.0 || lon > 180.0) {
        msg << t.source() << ":" << t.line_of(row) << ":" << lon_col + 1 << ": longitude outside [-180, 180]";
        throw InputError(msg.str());
    }
    if (lat < -90.0 || lat > 90.0) {
        msg << t.source() << ":" << t.line_of(row) << ":" << lat_col + 1 << ": latitude outside [-90, 90]";
        throw InputError(msg.str());
    }
}

void check_nonnegative(const csv::Table& t, std::size_t row, std::size_t col, double v) {
    if (v < 0.0) {
        std::ostringstream msg;
        msg << t.source() << ":" << t.line_of(row) << ":" << col + 1 << ": negative value in column '"
            << t.header()[col] << "'";
        throw InputError(msg.str());
    }
}

} // namespace

std::vector<ProxyRecord> read_proxy_csv(const std::string& path) {
    if (file_is_blank(path)) return {};
    const auto t = csv::Table::read_file(path);
    const auto c_name = t.require_column("site_name");
    const auto c_lon = t.require_column("lon");
    const auto c_lat = t.require_column("lat");
    const auto c_age = t.require_column("age_ce");
    const auto c_age_sd = t.require_column("age_sd_yr");
    const auto c_rsl = t.require_column("rsl_m");
    const auto c_rsl_sd = t.require_column("rsl_sd_m");
    const auto c_mean = t.column("slope_prior_mean_mm_yr");
    const auto c_sd = t.column("slope_prior_sd_mm_yr");

    std::vector<ProxyRecord> out;
    out.reserve(t.rows());
    for (std::size_t r = 0; r < t.rows(); ++r) {
        ProxyRecord rec;
        rec.site_name = t.cell(r, c_name);
        if (rec.site_name.empty()) {
            std::ostringstream msg;
            msg << path << ":" << t.line_of(r) << ":" << c_name + 1 << ": empty site_name";
            throw InputError(msg.str());
        }
        check_coordinates(t, r, c_lon, c_lat);
        rec.lon = t.number(r, c_lon);
        rec.lat = t.number(r, c_lat);
        rec.obs.age = t.number(r, c_age);
        rec.obs.age_sd = t.number(r, c_age_sd);
        check_nonnegative(t, r, c_age_sd, rec.obs.age_sd);
        rec.obs.rsl = t.number(r, c_rsl);
        rec.obs.rsl_sd = t.number(r, c_rsl_sd);
        check_nonnegative(t, r, c_rsl_sd, rec.obs.rsl_sd);
        rec.obs.source = SourceKind::Proxy;
        if (c_mean) {
            if (auto v = t.optional_number(r, *c_mean)) rec.slope_prior_mean = *v / 1000.0;
        }
        if (c_sd) {
            if (auto v = t.optional_number(r, *c_sd)) {
                if (*v <= 0.0) {
                    std::ostringstream msg;
                    msg << path << ":" << t.line_of(r) << ":" << *c_sd + 1 << ": slope prior sd must be positive";
                    throw InputError(msg.str());
                }
                rec.slope_prior_sd = *v / 1000.0;
            }
        }
        rec.line = t.line_of(r);
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<GaugeSeries> read_gauge_csv(const std::string& path) {
    if (path.empty() || file_is_blank(path)) return {};
    const auto t = csv::Table::read_file(path);
    const auto c_name = t.require_column("station_name");
    const auto c_lon = t.require_column("lon");
    const auto c_lat = t.require_column("lat");
    const auto c_year = t.require_column("year_ce");
    const auto c_value = t.require_column("annual_mean_m");
    const auto c_mean = t.column("slope_prior_mean_mm_yr");
    const auto c_sd = t.column("slope_prior_sd_mm_yr");

    std::map<std::string, GaugeSeries> by_name;
    std::map<std::string, std::vector<std::pair<int, double>>> points;
    for (std::size_t r = 0; r < t.rows(); ++r) {
        const std::string& name = t.cell(r, c_name);
        if (name.empty()) {
            std::ostringstream msg;
            msg << path << ":" << t.line_of(r) << ":" << c_name + 1 << ": empty station_name";
            throw InputError(msg.str());
        }
        check_coordinates(t, r, c_lon, c_lat);
        const double lon = t.number(r, c_lon);
        const double lat = t.number(r, c_lat);
        auto [it, inserted] = by_name.try_emplace(name);
        GaugeSeries& s = it->second;
        if (inserted) {
            s.name = name;
            s.lon = lon;
            s.lat = lat;
        } else if (s.lon != lon || s.lat != lat) {
            std::ostringstream msg;
            msg << path << ":" << t.line_of(r) << ":" << c_lon + 1 << ": station '" << name
                << "' appears with conflicting coordinates";
            throw InputError(msg.str());
        }
        if (c_mean) {
            if (auto v = t.optional_number(r, *c_mean)) s.slope_prior_mean = *v / 1000.0;
        }
        if (c_sd) {
            if (auto v = t.optional_number(r, *c_sd)) s.slope_prior_sd = *v / 1000.0;
        }
        const long long year = t.integer(r, c_year);
        if (auto v = t.optional_number(r, c_value)) {
            auto& pts = points[name];
            for (const auto& [y, _] : pts) {
                if (y == year) {
                    std::ostringstream msg;
                    msg << path << ":" << t.line_of(r) << ":" << c_year + 1 << ": duplicate year " << year
                        << " for station '" << name << "'";
                    throw InputError(msg.str());
                }
            }
            pts.emplace_back(static_cast<int>(year), *v);
        }
    }

    std::vector<GaugeSeries> out;
    for (auto& [name, s] : by_name) {
        auto pts = points[name];
        std::sort(pts.begin(), pts.end());
        for (const auto& [y, v] : pts) {
            s.years.push_back(y);
            s.values.push_back(v);
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<GaugeSeries> filter_tide_gauges(const std::vector<GaugeSeries>& annual, const SiteRegistry& proxy_sites,
                                            const IngestOptions& options, std::vector<std::string>* warnings) {
    std::vector<const GaugeSeries*> usable;
    for (const auto& s : annual) {
        if (s.years.empty()) {
            if (warnings) warnings->push_back("tide gauge '" + s.name + "' has no data points; rejected");
            continue;
        }
        usable.push_back(&s);
    }

    std::vector<bool> keep(usable.size(), false);
    for (std::size_t g = 0; g < usable.size(); ++g)
        if (usable[g]->record_length() > options.long_record_years) keep[g] = true;

    for (const auto& site : proxy_sites.sites()) {
        if (site.source != SourceKind::Proxy) continue;
        std::optional<std::size_t> nearest;
        double best = 0.0;
        for (std::size_t g = 0; g < usable.size(); ++g) {
            const double d = great_circle_degrees(site.lon, site.lat, usable[g]->lon, usable[g]->lat);
            if (d <= options.near_distance_deg && usable[g]->record_length() > options.near_record_years)
                keep[g] = true;
            if (!nearest || d < best || (d == best && usable[g]->name < usable[*nearest]->name)) {
                nearest = g;
                best = d;
            }
        }
        if (nearest) keep[*nearest] = true;
    }

    std::vector<GaugeSeries> out;
    for (std::size_t g = 0; g < usable.size(); ++g)
        if (keep[g]) out.push_back(*usable[g]);
    return out;
}

GaugeSeries reference_to_datum(const GaugeSeries& series, const IngestOptions& options) {
    double sum = 0.0;
    int count = 0;
    for (std::size_t i = 0; i < series.years.size(); ++i) {
        if (series.years[i] >= options.datum_first_year && series.years[i] <= options.datum_last_year) {
            sum += series.values[i];
            ++count;
        }
    }
    if (count == 0) {
        std::ostringstream msg;
        msg << "tide gauge '" << series.name << "' has no data in the datum window " << options.datum_first_year
            << "-" << options.datum_last_year;
        throw InputError(msg.str());
    }
    const double mean = sum / count;
    GaugeSeries out = series;
    for (auto& v : out.values) v -= mean;
    return out;
}

std::vector<Observation> decadal_average(const GaugeSeries& series, int site_id, const IngestOptions& options) {
    std::map<int, std::vector<double>> decades;
    for (std::size_t i = 0; i < series.years.size(); ++i) {
        const int start = static_cast<int>(std::floor(series.years[i] / 10.0)) * 10;
        decades[start].push_back(series.values[i]);
    }
    std::vector<Observation> out;
    out.reserve(decades.size());
    for (const auto& [start, vals] : decades) {
        const double n = static_cast<double>(vals.size());
        const double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / n;
        // Identical values must give exactly zero, which the rounded mean does not.
        const bool constant = std::all_of(vals.begin(), vals.end(), [&](double v) { return v == vals.front(); });
        double sd = 0.0;
        if (vals.size() > 1 && !constant) {
            double ss = 0.0;
            for (double v : vals) ss += (v - mean) * (v - mean);
            sd = std::sqrt(ss / (n - 1.0));
        }
        if (sd == 0.0) sd = options.rsl_sd_floor;
        out.push_back(Observation{site_id, start + 5.0, 5.0, mean, sd, SourceKind::TideGauge});
    }
    return out;
}

SlopePrior empirical_slope_prior(std::span<const Observation> site_obs, const IngestOptions& options) {
    std::vector<const Observation*> early;
    for (const auto& o : site_obs)
        if (o.age < options.pre_industrial_cutoff) early.push_back(&o);
    if (early.size() < 3) {
        std::ostringstream msg;
        msg << "only " << early.size() << " observations before " << options.pre_industrial_cutoff
            << " CE; supply slope_prior_mean_mm_yr and slope_prior_sd_mm_yr for this site";
        throw InputError(msg.str());
    }
    const double n = static_cast<double>(early.size());
    double mt = 0.0, my = 0.0;
    for (const auto* o : early) {
        mt += o->age;
        my += o->rsl;
    }
    mt /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (const auto* o : early) {
        sxx += (o->age - mt) * (o->age - mt);
        sxy += (o->age - mt) * (o->rsl - my);
    }
    if (!(sxx > 0.0)) throw InputError("pre-1800 observations share a single age; slope is undefined");
    const double slope = sxy / sxx;
    double rss = 0.0;
    for (const auto* o : early) {
        const double e = o->rsl - my - slope * (o->age - mt);
        rss += e * e;
    }
    return SlopePrior{slope, std::sqrt(rss / (n - 2.0) / sxx)};
}

namespace {

std::string site_label(const std::string& name) { return "'" + name + "'"; }

} // namespace

Dataset load_observations(const std::string& proxy_csv, const std::string& gauge_csv, const IngestOptions& options) {
    Dataset data;
    const auto proxies = read_proxy_csv(proxy_csv);

    struct Pending {
        Site site;
        std::vector<Observation> obs;
        std::optional<double> prior_mean, prior_sd;
    };
    std::map<std::string, Pending> pending;
    for (const auto& rec : proxies) {
        auto [it, inserted] = pending.try_emplace(rec.site_name);
        Pending& p = it->second;
        if (inserted) {
            p.site.name = rec.site_name;
            p.site.lon = rec.lon;
            p.site.lat = rec.lat;
            p.site.source = SourceKind::Proxy;
        } else if (p.site.lon != rec.lon || p.site.lat != rec.lat) {
            std::ostringstream msg;
            msg << proxy_csv << ":" << rec.line << ":2: site " << site_label(rec.site_name)
                << " appears with conflicting coordinates";
            throw InputError(msg.str());
        }
        if (rec.slope_prior_mean) p.prior_mean = rec.slope_prior_mean;
        if (rec.slope_prior_sd) p.prior_sd = rec.slope_prior_sd;
        p.obs.push_back(rec.obs);
    }

    for (auto& [name, p] : pending) {
        if (p.prior_mean) {
            if (!p.prior_sd) throw InputError("site " + site_label(name) + " has a slope prior mean but no sd");
            p.site.slope_prior_mean = *p.prior_mean;
            p.site.slope_prior_sd = *p.prior_sd;
        } else {
            try {
                const SlopePrior prior = empirical_slope_prior(p.obs, options);
                p.site.slope_prior_mean = prior.mean;
                p.site.slope_prior_sd = prior.sd;
            } catch (const InputError& e) {
                throw InputError(proxy_csv + ": site " + site_label(name) + ": " + e.what());
            }
            if (!(p.site.slope_prior_sd > 0.0))
                throw InputError(proxy_csv + ": site " + site_label(name) +
                                 ": empirical slope prior has zero standard error; supply the prior manually");
        }
    }

    std::vector<Site> proxy_sites;
    for (const auto& [name, p] : pending) proxy_sites.push_back(p.site);
    const SiteRegistry proxy_registry(proxy_sites);

    const auto annual = read_gauge_csv(gauge_csv);
    const auto kept = filter_tide_gauges(annual, proxy_registry, options, &data.warnings);
    for (const auto& series : kept) {
        if (pending.count(series.name))
            throw InputError(gauge_csv + ": station " + site_label(series.name) + " clashes with a proxy site name");
        if (!series.slope_prior_mean)
            throw InputError(gauge_csv + ": station " + site_label(series.name) +
                             " needs slope_prior_mean_mm_yr (GIA rate) because it passes the gauge filter");
        Pending p;
        p.site.name = series.name;
        p.site.lon = series.lon;
        p.site.lat = series.lat;
        p.site.source = SourceKind::TideGauge;
        p.site.slope_prior_mean = *series.slope_prior_mean;
        p.site.slope_prior_sd = series.slope_prior_sd.value_or(options.gauge_slope_prior_sd);
        p.obs = decadal_average(reference_to_datum(series, options), 0, options);
        pending.emplace(series.name, std::move(p));
    }

    // std::map iteration is already lexicographic by name.
    std::vector<Site> sites;
    int id = 0;
    for (auto& [name, p] : pending) {
        sites.push_back(p.site);
        for (auto o : p.obs) {
            o.site_id = id;
            data.observations.push_back(o);
        }
        ++id;
    }
    data.sites = SiteRegistry(std::move(sites));
    data.validate();
    return data;
}

void write_observation_table(const Dataset& data, std::ostream& out) {
    csv::write_row(out, {"site_id", "site_name", "lon", "lat", "source", "age_ce", "age_sd_yr", "rsl_m", "rsl_sd_m"});
    for (const auto& o : data.observations) {
        const Site& s = data.sites[o.site_id];
        csv::write_row(out, {std::to_string(o.site_id), s.name, csv::format_double(s.lon), csv::format_double(s.lat),
                             to_string(o.source), csv::format_double(o.age), csv::format_double(o.age_sd),
                             csv::format_double(o.rsl), csv::format_double(o.rsl_sd)});
    }
}

void write_site_table(const SiteRegistry& sites, std::ostream& out) {
    csv::write_row(out, {"site_id", "site_name", "lon", "lat", "source", "slope_prior_mean_mm_yr",
                         "slope_prior_sd_mm_yr"});
    for (std::size_t j = 0; j < sites.size(); ++j) {
        const Site& s = sites[j];
        csv::write_row(out, {std::to_string(j), s.name, csv::format_double(s.lon), csv::format_double(s.lat),
                             to_string(s.source), csv::format_double(s.slope_prior_mean * 1000.0),
                             csv::format_double(s.slope_prior_sd * 1000.0)});
    }
}

Dataset read_dataset_tables(const std::string& observations_csv, const std::string& sites_csv) {
    Dataset data;
    const auto st = csv::Table::read_file(sites_csv);
    const auto c_id = st.require_column("site_id");
    const auto c_name = st.require_column("site_name");
    const auto c_lon = st.require_column("lon");
    const auto c_lat = st.require_column("lat");
    const auto c_src = st.require_column("source");
    const auto c_mean = st.require_column("slope_prior_mean_mm_yr");
    const auto c_sd = st.require_column("slope_prior_sd_mm_yr");
    std::vector<Site> sites;
    for (std::size_t r = 0; r < st.rows(); ++r) {
        if (st.integer(r, c_id) != static_cast<long long>(r))
            throw InputError(sites_csv + ":" + std::to_string(st.line_of(r)) + ":1: site ids must be 0..m-1 in order");
        Site s;
        s.name = st.cell(r, c_name);
        s.lon = st.number(r, c_lon);
        s.lat = st.number(r, c_lat);
        s.source = source_from_string(st.cell(r, c_src));
        s.slope_prior_mean = st.number(r, c_mean) / 1000.0;
        s.slope_prior_sd = st.number(r, c_sd) / 1000.0;
        sites.push_back(std::move(s));
    }
    data.sites = SiteRegistry(std::move(sites));

    const auto ot = csv::Table::read_file(observations_csv);
    const auto o_id = ot.require_column("site_id");
    const auto o_src = ot.require_column("source");
    const auto o_age = ot.require_column("age_ce");
    const auto o_age_sd = ot.require_column("age_sd_yr");
    const auto o_rsl = ot.require_column("rsl_m");
    const auto o_rsl_sd = ot.require_column("rsl_sd_m");
    for (std::size_t r = 0; r < ot.rows(); ++r) {
        Observation o;
        o.site_id = static_cast<int>(ot.integer(r, o_id));
        o.source = source_from_string(ot.cell(r, o_src));
        o.age = ot.number(r, o_age);
        o.age_sd = ot.number(r, o_age_sd);
        o.rsl = ot.number(r, o_rsl);
        o.rsl_sd = ot.number(r, o_rsl_sd);
        data.observations.push_back(o);
    }
    data.validate();
    return data;
}

void write_proxy_csv(const Dataset& data, std::ostream& out) {
    csv::write_row(out, {"site_name", "lon", "lat", "age_ce", "age_sd_yr", "rsl_m", "rsl_sd_m",
                         "slope_prior_mean_mm_yr", "slope_prior_sd_mm_yr"});
    for (const auto& o : data.observations) {
        const Site& s = data.sites[o.site_id];
        csv::write_row(out, {s.name, csv::format_double(s.lon), csv::format_double(s.lat), csv::format_double(o.age),
                             csv::format_double(o.age_sd), csv::format_double(o.rsl), csv::format_double(o.rsl_sd),
                             csv::format_double(s.slope_prior_mean * 1000.0),
                             csv::format_double(s.slope_prior_sd * 1000.0)});
    }
}

} // namespace nigam::ingest

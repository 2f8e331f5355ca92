#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "flowcast/calendar.hpp"
#include "flowcast/csv.hpp"

namespace flowcast {

struct EntryRecord {
    int poi_id = 0;
    std::int64_t t_seconds = 0;
};

enum class HolidayKind { kNational, kSchool };

struct HolidayRecord {
    DayIndex day = 0;
    HolidayKind kind = HolidayKind::kNational;
};

struct WeatherRecord {
    HourIndex hour = 0;
    double temp_c = 0, feels_like_c = 0, wind_mps = 0, precip_mm = 0, clouds_pct = 0;
    std::string description;
};

/// Hourly entry counts, one column per POI; absent hours are explicit zeros.
struct HourlyPanel {
    HourIndex start_hour = 0;
    std::size_t poi_count = 0;
    std::vector<std::int64_t> counts;  // T x P row-major
    std::vector<std::string> poi_names;

    std::size_t hours() const { return poi_count ? counts.size() / poi_count : 0; }
    std::int64_t at(std::size_t t, std::size_t p) const { return counts[t * poi_count + p]; }
};

inline HourlyPanel aggregate_hourly(std::span<const EntryRecord> entries, HourIndex start_hour,
                                    HourIndex end_hour, std::size_t poi_count) {
    if (end_hour <= start_hour) throw std::invalid_argument("aggregate_hourly: empty hour range");
    HourlyPanel panel;
    panel.start_hour = start_hour;
    panel.poi_count = poi_count;
    panel.counts.assign(static_cast<std::size_t>(end_hour - start_hour) * poi_count, 0);
    panel.poi_names.reserve(poi_count);
    for (std::size_t p = 0; p < poi_count; ++p) panel.poi_names.push_back("poi_" + std::to_string(p));
    for (const EntryRecord& e : entries) {
        if (e.poi_id < 0 || static_cast<std::size_t>(e.poi_id) >= poi_count) {
            throw std::invalid_argument("aggregate_hourly: unknown poi_id " + std::to_string(e.poi_id));
        }
        const HourIndex h = hour_of_seconds(e.t_seconds);
        if (h < start_hour || h >= end_hour) {
            throw std::invalid_argument("aggregate_hourly: entry at " +
                                        format_timestamp_seconds(e.t_seconds) + " outside range");
        }
        panel.counts[static_cast<std::size_t>(h - start_hour) * poi_count + e.poi_id] += 1;
    }
    return panel;
}

// ---------------------------------------------------------------------------
// feature building

inline const std::array<std::string, 8>& weather_vocabulary() {
    static const std::array<std::string, 8> vocab = {"Snow", "Rain",    "Clouds", "Clear",
                                                     "Mist", "Fog", "Drizzle", "Thunderstorm"};
    return vocab;
}

enum class NormMode : std::uint8_t { kNone = 0, kMinMax = 1, kMaxDiv = 2 };

struct FeatureBuildConfig {
    std::vector<int> train_years;
    int max_weather_gap_hours = 6;
};

/// T x F matrix of model inputs. All columns except the sine/cosine pair are
/// rescaled with statistics taken from training rows only; test rows may
/// fall outside [0,1] and are deliberately not clipped.
struct FeatureFrame {
    HourIndex start_hour = 0;
    std::size_t poi_count = 0;
    std::size_t feature_count = 0;
    std::vector<double> features;  // T x F, normalized
    std::vector<std::string> columns;
    std::vector<NormMode> norm_mode;
    std::vector<double> col_min, col_max;  // training-row statistics
    std::vector<double> raw_counts;        // T x P
    std::vector<std::string> poi_names;
    std::vector<int> train_years;
    std::vector<std::string> warnings;

    std::size_t rows() const { return feature_count ? features.size() / feature_count : 0; }
    HourIndex hour_of_row(std::size_t t) const { return start_hour + static_cast<HourIndex>(t); }
    int year_of_row(std::size_t t) const { return year_of_hour(hour_of_row(t)); }
    std::size_t count_col(std::size_t p) const { return feature_count - poi_count + p; }
    double raw_count(std::size_t t, std::size_t p) const { return raw_counts[t * poi_count + p]; }
    double feature(std::size_t t, std::size_t f) const { return features[t * feature_count + f]; }

    double count_min(std::size_t p) const { return col_min[count_col(p)]; }
    double count_max(std::size_t p) const { return col_max[count_col(p)]; }
    /// Inverse of the count-column min-max scaling.
    double denormalize_count(std::size_t p, double v) const {
        const double lo = count_min(p), hi = count_max(p);
        return hi > lo ? lo + v * (hi - lo) : lo;
    }
    double normalize_count(std::size_t p, double v) const {
        const double lo = count_min(p), hi = count_max(p);
        return hi > lo ? (v - lo) / (hi - lo) : 0.0;
    }
};

namespace datapipe_detail {

struct HolidayCalendar {
    std::set<DayIndex> national;
    std::set<DayIndex> school;

    bool is_school_day(DayIndex d) const {
        if (is_weekend(d)) return false;
        if (national.count(d) || school.count(d)) return false;
        return true;
    }

    int days_to_next_school_day(DayIndex d) const {
        for (int k = 0; k <= 400; ++k) {
            if (is_school_day(d + k)) return k;
        }
        throw std::invalid_argument("holiday calendar has no school day within 400 days");
    }
};

inline HolidayCalendar index_holidays(std::span<const HolidayRecord> holidays) {
    HolidayCalendar cal;
    for (const auto& h : holidays) {
        (h.kind == HolidayKind::kNational ? cal.national : cal.school).insert(h.day);
    }
    return cal;
}

/// Aligns weather records to the panel's hourly grid, forward-filling gaps up
/// to the configured limit.
inline std::vector<WeatherRecord> align_weather(std::span<const WeatherRecord> weather,
                                                HourIndex start, std::size_t hours, int max_gap) {
    std::vector<WeatherRecord> sorted(weather.begin(), weather.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const WeatherRecord& a, const WeatherRecord& b) { return a.hour < b.hour; });
    std::vector<WeatherRecord> out;
    out.reserve(hours);
    std::size_t idx = 0;
    std::optional<WeatherRecord> last;
    for (std::size_t t = 0; t < hours; ++t) {
        const HourIndex h = start + static_cast<HourIndex>(t);
        while (idx < sorted.size() && sorted[idx].hour <= h) last = sorted[idx++];
        if (!last) {
            throw std::invalid_argument("weather data starts after " + format_hour(h));
        }
        if (h - last->hour > max_gap) {
            throw std::invalid_argument("weather gap exceeds " + std::to_string(max_gap) +
                                        " hours at " + format_hour(h));
        }
        WeatherRecord filled = *last;
        filled.hour = h;
        out.push_back(std::move(filled));
    }
    return out;
}

}  // namespace datapipe_detail

inline FeatureFrame build_features(const HourlyPanel& panel,
                                   std::span<const HolidayRecord> holidays,
                                   std::span<const WeatherRecord> weather,
                                   const FeatureBuildConfig& cfg) {
    if (cfg.train_years.empty()) throw std::invalid_argument("build_features: no training years");
    const std::size_t T = panel.hours();
    const std::size_t P = panel.poi_count;
    const auto& vocab = weather_vocabulary();
    const std::size_t n_desc = vocab.size() + 1;  // + OTHER

    FeatureFrame frame;
    frame.start_hour = panel.start_hour;
    frame.poi_count = P;
    frame.poi_names = panel.poi_names;
    frame.train_years = cfg.train_years;
    std::sort(frame.train_years.begin(), frame.train_years.end());

    frame.columns = {"year",         "month_sin",      "month_cos", "day_of_month",
                     "day_of_week",  "hour",           "holiday_national",
                     "holiday_school", "days_to_school"};
    frame.columns.insert(frame.columns.end(),
                         {"w_temp", "w_feels", "w_wind", "w_precip", "w_clouds"});
    for (const auto& d : vocab) frame.columns.push_back("w_desc_" + d);
    frame.columns.push_back("w_desc_OTHER");
    for (std::size_t p = 0; p < P; ++p) frame.columns.push_back(panel.poi_names[p] + "_count");
    const std::size_t F = frame.columns.size();
    frame.feature_count = F;
    frame.norm_mode.assign(F, NormMode::kMinMax);
    frame.norm_mode[1] = NormMode::kNone;  // month_sin
    frame.norm_mode[2] = NormMode::kNone;  // month_cos
    frame.norm_mode[8] = NormMode::kMaxDiv;  // days_to_school

    auto cal = datapipe_detail::index_holidays(holidays);
    auto wx = datapipe_detail::align_weather(weather, panel.start_hour, T, cfg.max_weather_gap_hours);

    std::set<std::string> unknown_descs;
    frame.features.assign(T * F, 0.0);
    frame.raw_counts.assign(T * P, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
        const HourIndex h = panel.start_hour + static_cast<HourIndex>(t);
        const DayIndex day = day_of_hour(h);
        const CivilTime ct = civil_of_hour(h);
        double* row = frame.features.data() + t * F;
        const double month_angle = 2.0 * 3.14159265358979323846 * (ct.month - 1) / 12.0;
        row[0] = ct.year;
        row[1] = std::sin(month_angle);
        row[2] = std::cos(month_angle);
        row[3] = ct.day;
        row[4] = iso_weekday(day) - 1;  // 0 = Monday .. 6 = Sunday
        row[5] = ct.hour;
        row[6] = cal.national.count(day) ? 1.0 : 0.0;
        row[7] = cal.school.count(day) ? 1.0 : 0.0;
        row[8] = cal.days_to_next_school_day(day);
        const WeatherRecord& w = wx[t];
        row[9] = w.temp_c;
        row[10] = w.feels_like_c;
        row[11] = w.wind_mps;
        row[12] = w.precip_mm;
        row[13] = w.clouds_pct;
        std::size_t desc_idx = vocab.size();  // OTHER
        for (std::size_t i = 0; i < vocab.size(); ++i) {
            if (w.description == vocab[i]) {
                desc_idx = i;
                break;
            }
        }
        if (desc_idx == vocab.size() && unknown_descs.insert(w.description).second) {
            frame.warnings.push_back("unknown weather description '" + w.description +
                                     "' mapped to OTHER");
        }
        row[14 + desc_idx] = 1.0;
        for (std::size_t p = 0; p < P; ++p) {
            const double cnt = static_cast<double>(panel.at(t, p));
            frame.raw_counts[t * P + p] = cnt;
            row[14 + n_desc + p] = cnt;
        }
    }

    // training-row statistics, then in-place rescale of every row
    frame.col_min.assign(F, 0.0);
    frame.col_max.assign(F, 0.0);
    bool any_train = false;
    std::vector<bool> is_train(T);
    for (std::size_t t = 0; t < T; ++t) {
        const int y = frame.year_of_row(t);
        is_train[t] = std::find(frame.train_years.begin(), frame.train_years.end(), y) !=
                      frame.train_years.end();
        any_train = any_train || is_train[t];
    }
    if (!any_train) throw std::invalid_argument("build_features: no rows in training years");
    std::vector<bool> seeded(F, false);
    for (std::size_t t = 0; t < T; ++t) {
        if (!is_train[t]) continue;
        const double* row = frame.features.data() + t * F;
        for (std::size_t f = 0; f < F; ++f) {
            if (!seeded[f]) {
                frame.col_min[f] = frame.col_max[f] = row[f];
                seeded[f] = true;
            } else {
                frame.col_min[f] = std::min(frame.col_min[f], row[f]);
                frame.col_max[f] = std::max(frame.col_max[f], row[f]);
            }
        }
    }
    for (std::size_t t = 0; t < T; ++t) {
        double* row = frame.features.data() + t * F;
        for (std::size_t f = 0; f < F; ++f) {
            switch (frame.norm_mode[f]) {
                case NormMode::kNone:
                    break;
                case NormMode::kMinMax: {
                    const double lo = frame.col_min[f], hi = frame.col_max[f];
                    row[f] = hi > lo ? (row[f] - lo) / (hi - lo) : 0.0;
                    break;
                }
                case NormMode::kMaxDiv: {
                    const double hi = frame.col_max[f];
                    row[f] = hi > 0 ? row[f] / hi : 0.0;
                    break;
                }
            }
        }
    }
    return frame;
}

// ---------------------------------------------------------------------------
// splitting and windowing

struct RowRange {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t size() const { return end - begin; }
};

/// Row-disjoint partition by calendar year. Both partitions must be
/// non-empty and contiguous (rows are in time order).
inline std::pair<RowRange, RowRange> split_by_year(const FeatureFrame& frame,
                                                   std::span<const int> train_years,
                                                   int test_year) {
    auto in_train = [&](int y) {
        return std::find(train_years.begin(), train_years.end(), y) != train_years.end();
    };
    RowRange train{0, 0}, test{0, 0};
    bool train_open = false, test_open = false, train_done = false, test_done = false;
    for (std::size_t t = 0; t < frame.rows(); ++t) {
        const int y = frame.year_of_row(t);
        if (in_train(y)) {
            if (train_done) throw std::invalid_argument("split_by_year: training rows not contiguous");
            if (!train_open) {
                train.begin = t;
                train_open = true;
            }
            train.end = t + 1;
        } else if (train_open) {
            train_done = true;
        }
        if (y == test_year) {
            if (test_done) throw std::invalid_argument("split_by_year: test rows not contiguous");
            if (!test_open) {
                test.begin = t;
                test_open = true;
            }
            test.end = t + 1;
        } else if (test_open) {
            test_done = true;
        }
    }
    if (train.size() == 0) throw std::invalid_argument("split_by_year: empty training split");
    if (test.size() == 0) throw std::invalid_argument("split_by_year: empty test split");
    return {train, test};
}

/// Overlapping input windows within one split; window i covers rows
/// [start, start+L) and its target is row start+L. Windows never cross the
/// split boundary.
struct WindowedDataset {
    const FeatureFrame* frame = nullptr;
    RowRange range;
    std::size_t length = 30;
    std::size_t stride = 1;
    std::vector<std::size_t> starts;

    std::size_t size() const { return starts.size(); }
    std::size_t target_row(std::size_t i) const { return starts[i] + length; }
};

inline WindowedDataset window(const FeatureFrame& frame, RowRange range, std::size_t length = 30,
                              std::size_t stride = 1) {
    if (stride == 0) throw std::invalid_argument("window: stride must be positive");
    if (range.end > frame.rows()) throw std::invalid_argument("window: range out of bounds");
    if (range.size() <= length) {
        throw std::invalid_argument("window: split has " + std::to_string(range.size()) +
                                    " rows, need more than " + std::to_string(length));
    }
    WindowedDataset ds;
    ds.frame = &frame;
    ds.range = range;
    ds.length = length;
    ds.stride = stride;
    for (std::size_t s = range.begin; s + length < range.end; s += stride) ds.starts.push_back(s);
    return ds;
}

// ---------------------------------------------------------------------------
// synthetic data generation

struct SynthConfig {
    std::size_t poi_count = 32;
    int year_begin = 2017;
    int year_end = 2019;  // inclusive
    std::vector<double> base_rate;
    std::array<double, 24> daily_profile{};
    std::array<double, 7> weekly_profile{};    // Monday first
    std::array<double, 12> seasonal_profile{};
    std::vector<std::pair<int, int>> opening_hours;  // [open, close) per POI
    struct EventSpike {
        std::size_t poi = 0;
        DayIndex day = 0;
        double factor = 1.0;
    };
    std::vector<EventSpike> events;
    std::uint64_t seed = 0;

    HourIndex start_hour() const { return hour_index(year_begin, 1, 1, 0); }
    HourIndex end_hour() const { return hour_index(year_end + 1, 1, 1, 0); }

    void validate() const {
        if (poi_count == 0) throw std::invalid_argument("synth: poi_count must be positive");
        if (year_end < year_begin) throw std::invalid_argument("synth: bad year range");
        if (base_rate.size() != poi_count || opening_hours.size() != poi_count) {
            throw std::invalid_argument("synth: per-POI arrays must have poi_count entries");
        }
        for (double b : base_rate) {
            if (b < 0) throw std::invalid_argument("synth: negative base rate");
        }
        auto check_nonneg = [](std::span<const double> v, const char* what) {
            for (double x : v) {
                if (x < 0) throw std::invalid_argument(std::string("synth: negative ") + what);
            }
        };
        check_nonneg(daily_profile, "daily factor");
        check_nonneg(weekly_profile, "weekly factor");
        check_nonneg(seasonal_profile, "seasonal factor");
        for (auto [open, close] : opening_hours) {
            if (open < 0 || close > 24 || open >= close) {
                throw std::invalid_argument("synth: invalid opening hours");
            }
        }
        for (const auto& e : events) {
            if (e.poi >= poi_count || e.factor < 0) throw std::invalid_argument("synth: bad event");
        }
    }

    static SynthConfig make_default(std::size_t pois, int y0, int y1, std::uint64_t seed) {
        SynthConfig cfg;
        cfg.poi_count = pois;
        cfg.year_begin = y0;
        cfg.year_end = y1;
        cfg.seed = seed;
        cfg.daily_profile = {0, 0, 0, 0, 0, 0, 0.2, 0.4, 0.7, 1.0, 1.25, 1.35,
                             1.3, 1.25, 1.2, 1.1, 0.9, 0.7, 0.5, 0.35, 0.2, 0.1, 0, 0};
        cfg.weekly_profile = {0.9, 0.85, 0.9, 0.95, 1.05, 1.3, 1.2};
        cfg.seasonal_profile = {0.7, 0.72, 0.8, 0.95, 1.1, 1.25, 1.42, 1.45, 1.18, 0.98, 0.78, 0.88};
        std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
        std::uniform_real_distribution<double> base(8.0, 24.0);
        const std::array<std::pair<int, int>, 3> hours = {{{9, 18}, {8, 20}, {10, 17}}};
        for (std::size_t p = 0; p < pois; ++p) {
            cfg.base_rate.push_back(base(rng));
            cfg.opening_hours.push_back(hours[p % hours.size()]);
        }
        std::uniform_real_distribution<double> factor(1.5, 2.5);
        for (int y = y0; y <= y1; ++y) {
            const DayIndex first = day_index(y, 1, 1);
            const DayIndex last = day_index(y, 12, 31);
            std::uniform_int_distribution<int> day(0, last - first);
            std::uniform_int_distribution<std::size_t> poi(0, pois - 1);
            for (int k = 0; k < 6; ++k) {
                cfg.events.push_back({poi(rng), first + day(rng), factor(rng)});
            }
        }
        return cfg;
    }
};

struct SynthData {
    std::vector<EntryRecord> entries;
    std::vector<HolidayRecord> holidays;
    std::vector<WeatherRecord> weather;
};

namespace datapipe_detail {

inline void add_holiday_year(std::vector<HolidayRecord>& out, int year) {
    const std::array<std::pair<int, int>, 9> national = {
        {{1, 1}, {1, 6}, {5, 1}, {8, 15}, {10, 26}, {11, 1}, {12, 8}, {12, 25}, {12, 26}}};
    for (auto [m, d] : national) out.push_back({day_index(year, m, d), HolidayKind::kNational});
    auto add_range = [&](int m0, int d0, int m1, int d1) {
        for (DayIndex d = day_index(year, m0, d0); d <= day_index(year, m1, d1); ++d) {
            out.push_back({d, HolidayKind::kSchool});
        }
    };
    add_range(2, 4, 2, 12);     // semester break
    add_range(7, 1, 8, 31);     // summer
    add_range(12, 24, 12, 31);  // winter break
    add_range(1, 1, 1, 6);      // tail of the previous winter break
}

inline std::string weather_description(int month, double temp, double precip, double wind,
                                       double clouds) {
    if (precip > 4.0) return "Thunderstorm";
    if (precip > 0.08) {
        if (temp < 1.0) return "Snow";
        return precip > 0.5 ? "Rain" : "Drizzle";
    }
    if (clouds > 85.0 && wind < 1.5) {
        return (month >= 10 || month <= 1) ? "Fog" : "Mist";
    }
    if (clouds > 55.0) return "Clouds";
    return "Clear";
}

}  // namespace datapipe_detail

/// Draws Poisson visitor counts per hour and POI with rate
/// base * daily * weekly * seasonal (* event spike), zero outside opening
/// hours; weather follows a seasonal random walk. Deterministic per seed.
inline SynthData synth_generate(const SynthConfig& cfg) {
    cfg.validate();
    SynthData data;
    for (int y = cfg.year_begin; y <= cfg.year_end; ++y) {
        datapipe_detail::add_holiday_year(data.holidays, y);
    }
    std::sort(data.holidays.begin(), data.holidays.end(), [](const auto& a, const auto& b) {
        return a.day != b.day ? a.day < b.day : static_cast<int>(a.kind) < static_cast<int>(b.kind);
    });
    data.holidays.erase(std::unique(data.holidays.begin(), data.holidays.end(),
                                    [](const auto& a, const auto& b) {
                                        return a.day == b.day && a.kind == b.kind;
                                    }),
                        data.holidays.end());

    std::map<std::pair<std::size_t, DayIndex>, double> event_factor;
    for (const auto& e : cfg.events) {
        auto [it, inserted] = event_factor.try_emplace({e.poi, e.day}, e.factor);
        if (!inserted) it->second *= e.factor;
    }

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    double temp_dev = 0.0, clouds = 50.0, wind = 2.0;
    for (HourIndex h = cfg.start_hour(); h < cfg.end_hour(); ++h) {
        const CivilTime ct = civil_of_hour(h);
        const DayIndex day = day_of_hour(h);
        const int dow = iso_weekday(day);  // 1..7

        // weather state walk
        const double season_mean = -1.0 + 22.0 * 0.5 *
                                   (1.0 - std::cos(2.0 * 3.14159265358979323846 * (ct.month - 0.5) / 12.0));
        const double diurnal = 4.0 * std::sin(2.0 * 3.14159265358979323846 * (ct.hour - 9) / 24.0);
        temp_dev = 0.98 * temp_dev + 0.6 * noise(rng);
        clouds = std::clamp(clouds + 6.0 * noise(rng), 0.0, 100.0);
        wind = std::clamp(wind + 0.4 * noise(rng), 0.0, 18.0);
        const double temp = season_mean + diurnal + temp_dev;
        double precip = 0.0;
        if (clouds > 70.0 && std::uniform_real_distribution<double>(0.0, 1.0)(rng) < 0.25) {
            precip = std::uniform_real_distribution<double>(0.05, 3.0)(rng);
            if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) < 0.03) precip += 4.0;
        }
        WeatherRecord w;
        w.hour = h;
        w.temp_c = std::round(temp * 10.0) / 10.0;
        w.feels_like_c = std::round((temp - 0.3 * wind) * 10.0) / 10.0;
        w.wind_mps = std::round(wind * 10.0) / 10.0;
        w.precip_mm = std::round(precip * 100.0) / 100.0;
        w.clouds_pct = std::round(clouds);
        w.description = datapipe_detail::weather_description(ct.month, temp, precip, wind, clouds);
        data.weather.push_back(std::move(w));

        for (std::size_t p = 0; p < cfg.poi_count; ++p) {
            const auto [open, close] = cfg.opening_hours[p];
            if (ct.hour < open || ct.hour >= close) continue;
            double lambda = cfg.base_rate[p] * cfg.daily_profile[ct.hour] *
                            cfg.weekly_profile[dow - 1] * cfg.seasonal_profile[ct.month - 1];
            if (auto it = event_factor.find({p, day}); it != event_factor.end()) {
                lambda *= it->second;
            }
            if (lambda <= 0.0) continue;
            const int k = std::poisson_distribution<int>(lambda)(rng);
            if (k <= 0) continue;
            std::vector<int> offsets(k);
            std::uniform_int_distribution<int> within(0, 3599);
            for (int i = 0; i < k; ++i) offsets[i] = within(rng);
            std::sort(offsets.begin(), offsets.end());
            for (int off : offsets) {
                data.entries.push_back({static_cast<int>(p), static_cast<std::int64_t>(h) * 3600 + off});
            }
        }
    }
    return data;
}

// ---------------------------------------------------------------------------
// CSV schemas and manifest

inline constexpr const char* kEntriesHeader = "poi_id,timestamp";
inline constexpr const char* kWeatherHeader =
    "timestamp,temp_c,feels_like_c,wind_mps,precip_mm,clouds_pct,description";
inline constexpr const char* kHolidaysHeader = "date,kind";

inline void write_entries_csv(const std::string& path, std::span<const EntryRecord> entries) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << kEntriesHeader << '\n';
    for (const auto& e : entries) {
        out << e.poi_id << ',' << format_timestamp_seconds(e.t_seconds) << '\n';
    }
}

inline std::vector<EntryRecord> read_entries_csv(const std::string& path) {
    std::vector<EntryRecord> out;
    csv::for_each_row(path, kEntriesHeader, [&](std::size_t line, const auto& fields) {
        if (fields.size() != 2) throw csv::ParseError(path, line, "want 2 fields");
        EntryRecord e;
        e.poi_id = static_cast<int>(csv::to_long(fields[0], path, line));
        try {
            e.t_seconds = parse_timestamp_seconds(fields[1]);
        } catch (const std::invalid_argument& ex) {
            throw csv::ParseError(path, line, ex.what());
        }
        out.push_back(e);
    });
    return out;
}

inline void write_weather_csv(const std::string& path, std::span<const WeatherRecord> weather) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << kWeatherHeader << '\n';
    char buf[160];
    for (const auto& w : weather) {
        std::snprintf(buf, sizeof(buf), "%s,%.1f,%.1f,%.1f,%.2f,%.0f,%s",
                      format_hour(w.hour).c_str(), w.temp_c, w.feels_like_c, w.wind_mps,
                      w.precip_mm, w.clouds_pct, w.description.c_str());
        out << buf << '\n';
    }
}

inline std::vector<WeatherRecord> read_weather_csv(const std::string& path) {
    std::vector<WeatherRecord> out;
    csv::for_each_row(path, kWeatherHeader, [&](std::size_t line, const auto& fields) {
        if (fields.size() != 7) throw csv::ParseError(path, line, "want 7 fields");
        WeatherRecord w;
        try {
            w.hour = hour_of_seconds(parse_timestamp_seconds(fields[0]));
        } catch (const std::invalid_argument& ex) {
            throw csv::ParseError(path, line, ex.what());
        }
        w.temp_c = csv::to_double(fields[1], path, line);
        w.feels_like_c = csv::to_double(fields[2], path, line);
        w.wind_mps = csv::to_double(fields[3], path, line);
        w.precip_mm = csv::to_double(fields[4], path, line);
        w.clouds_pct = csv::to_double(fields[5], path, line);
        w.description = std::string(csv::trim(fields[6]));
        out.push_back(std::move(w));
    });
    return out;
}

inline void write_holidays_csv(const std::string& path, std::span<const HolidayRecord> holidays) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << kHolidaysHeader << '\n';
    for (const auto& h : holidays) {
        out << format_day(h.day) << ','
            << (h.kind == HolidayKind::kNational ? "national" : "school") << '\n';
    }
}

inline std::vector<HolidayRecord> read_holidays_csv(const std::string& path) {
    std::vector<HolidayRecord> out;
    csv::for_each_row(path, kHolidaysHeader, [&](std::size_t line, const auto& fields) {
        if (fields.size() != 2) throw csv::ParseError(path, line, "want 2 fields");
        HolidayRecord h;
        try {
            h.day = parse_date(fields[0]);
        } catch (const std::invalid_argument& ex) {
            throw csv::ParseError(path, line, ex.what());
        }
        const auto kind = csv::trim(fields[1]);
        if (kind == "national") h.kind = HolidayKind::kNational;
        else if (kind == "school") h.kind = HolidayKind::kSchool;
        else throw csv::ParseError(path, line, "kind must be national or school");
        out.push_back(h);
    });
    return out;
}

inline void write_manifest(const std::string& path, const SynthConfig& cfg) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    auto join = [](std::span<const double> v) {
        std::ostringstream os;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) os << ',';
            os << v[i];
        }
        return os.str();
    };
    out << "pois=" << cfg.poi_count << '\n';
    out << "year_begin=" << cfg.year_begin << '\n';
    out << "year_end=" << cfg.year_end << '\n';
    out << "seed=" << cfg.seed << '\n';
    out << "base_rate=" << join(cfg.base_rate) << '\n';
    out << "daily_profile=" << join(cfg.daily_profile) << '\n';
    out << "weekly_profile=" << join(cfg.weekly_profile) << '\n';
    out << "seasonal_profile=" << join(cfg.seasonal_profile) << '\n';
    std::ostringstream oh;
    for (std::size_t p = 0; p < cfg.opening_hours.size(); ++p) {
        if (p) oh << ',';
        oh << cfg.opening_hours[p].first << '-' << cfg.opening_hours[p].second;
    }
    out << "opening_hours=" << oh.str() << '\n';
    out << "events=" << cfg.events.size() << '\n';
    for (const auto& e : cfg.events) {
        out << "event=" << e.poi << ',' << format_day(e.day) << ',' << e.factor << '\n';
    }
}

// ---------------------------------------------------------------------------
// feature-frame cache

inline void save_frame(const FeatureFrame& frame, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    auto join_str = [](std::span<const std::string> v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) s += ',';
            s += v[i];
        }
        return s;
    };
    std::ostringstream header;
    header << "flowcast-frame 1\n";
    header << "start_hour " << frame.start_hour << '\n';
    header << "poi_count " << frame.poi_count << '\n';
    header << "feature_count " << frame.feature_count << '\n';
    header << "rows " << frame.rows() << '\n';
    header << "train_years ";
    for (std::size_t i = 0; i < frame.train_years.size(); ++i) {
        if (i) header << ',';
        header << frame.train_years[i];
    }
    header << '\n';
    header << "columns " << join_str(frame.columns) << '\n';
    header << "norm_mode ";
    for (std::size_t i = 0; i < frame.norm_mode.size(); ++i) {
        if (i) header << ',';
        header << static_cast<int>(frame.norm_mode[i]);
    }
    header << '\n';
    header << "poi_names " << join_str(frame.poi_names) << '\n';
    header << "end\n";
    const std::string h = header.str();
    out.write(h.data(), static_cast<std::streamsize>(h.size()));
    auto write_doubles = [&](std::span<const double> v) {
        out.write(reinterpret_cast<const char*>(v.data()),
                  static_cast<std::streamsize>(v.size() * sizeof(double)));
    };
    write_doubles(frame.col_min);
    write_doubles(frame.col_max);
    write_doubles(frame.features);
    write_doubles(frame.raw_counts);
    if (!out) throw std::runtime_error("short write to " + path);
}

inline FeatureFrame load_frame(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != "flowcast-frame 1") {
        throw std::runtime_error(path + ": not a flowcast feature frame");
    }
    FeatureFrame frame;
    std::size_t rows = 0;
    auto split_commas = [](const std::string& s) {
        std::vector<std::string> out;
        std::size_t pos = 0;
        while (pos <= s.size()) {
            std::size_t comma = s.find(',', pos);
            if (comma == std::string::npos) {
                out.push_back(s.substr(pos));
                break;
            }
            out.push_back(s.substr(pos, comma - pos));
            pos = comma + 1;
        }
        return out;
    };
    while (std::getline(in, line) && line != "end") {
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        std::string rest;
        std::getline(ls, rest);
        if (!rest.empty() && rest.front() == ' ') rest.erase(0, 1);
        if (key == "start_hour") frame.start_hour = std::stoll(rest);
        else if (key == "poi_count") frame.poi_count = std::stoull(rest);
        else if (key == "feature_count") frame.feature_count = std::stoull(rest);
        else if (key == "rows") rows = std::stoull(rest);
        else if (key == "train_years") {
            for (const auto& y : split_commas(rest)) frame.train_years.push_back(std::stoi(y));
        } else if (key == "columns") frame.columns = split_commas(rest);
        else if (key == "norm_mode") {
            for (const auto& m : split_commas(rest)) {
                frame.norm_mode.push_back(static_cast<NormMode>(std::stoi(m)));
            }
        } else if (key == "poi_names") frame.poi_names = split_commas(rest);
        else throw std::runtime_error(path + ": unknown frame header key '" + key + "'");
    }
    auto read_doubles = [&](std::vector<double>& v, std::size_t n) {
        v.resize(n);
        in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
        if (static_cast<std::size_t>(in.gcount()) != n * sizeof(double)) {
            throw std::runtime_error(path + ": truncated frame data");
        }
    };
    read_doubles(frame.col_min, frame.feature_count);
    read_doubles(frame.col_max, frame.feature_count);
    read_doubles(frame.features, rows * frame.feature_count);
    read_doubles(frame.raw_counts, rows * frame.poi_count);
    return frame;
}

}  // namespace flowcast

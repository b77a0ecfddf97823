#include "netgan/data.hpp"

#include "netgan/errors.hpp"
#include "netgan/keyvalue.hpp"
#include "netgan/rng.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace netgan {

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t pos = 0;
    while (true) {
        const auto comma = line.find(',', pos);
        cells.push_back(trim(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos)));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return cells;
}

}  // namespace

Dataset load_csv(const std::string& path, LabelColumn label_mode) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty file");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    const auto header = split_commas(line);

    bool has_labels = false;
    if (label_mode == LabelColumn::Present) {
        if (header.back() != "label") throw ParseError(path + ": expected final column named 'label'");
        has_labels = true;
    } else if (label_mode == LabelColumn::Detect) {
        has_labels = header.size() > 1 && header.back() == "label";
    }
    const std::size_t n = header.size() - (has_labels ? 1 : 0);
    if (n == 0) throw ParseError(path + ": no series columns");

    Dataset ds;
    for (std::size_t i = 0; i < n; ++i) ds.names.emplace_back(header[i]);

    std::vector<double> flat;  // time-major while reading
    std::vector<std::uint8_t> labels;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++row;
        const auto cells = split_commas(line);
        if (cells.size() != header.size()) {
            throw ParseError(path + ": ragged row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                             " cells, header has " + std::to_string(header.size()));
        }
        for (std::size_t c = 0; c < n; ++c) {
            const std::string where = path + ": row " + std::to_string(row) + ", column '" + ds.names[c] + "'";
            double v = 0.0;
            try {
                v = parse_double(cells[c], where);
            } catch (const ParseError&) {
                throw ParseError(where + ": non-numeric cell '" + std::string(cells[c]) + "'");
            }
            if (!std::isfinite(v)) throw ParseError(where + ": non-numeric cell '" + std::string(cells[c]) + "'");
            flat.push_back(v);
        }
        if (has_labels) {
            const auto cell = cells.back();
            if (cell == "0") {
                labels.push_back(0);
            } else if (cell == "1") {
                labels.push_back(1);
            } else {
                throw ParseError(path + ": row " + std::to_string(row) + ": label '" + std::string(cell) +
                                 "' is not 0 or 1");
            }
        }
    }
    if (row == 0) throw ParseError(path + ": no data rows");

    ds.values = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>>(
        flat.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(row));
    if (has_labels) ds.labels = std::move(labels);
    return ds;
}

Dataset load_csv(const std::string& path, bool has_labels) {
    return load_csv(path, has_labels ? LabelColumn::Present : LabelColumn::Absent);
}

void write_csv(const Dataset& ds, const std::string& path) {
    ds.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    for (std::size_t i = 0; i < ds.names.size(); ++i) {
        if (i) out << ',';
        out << ds.names[i];
    }
    if (ds.labels) out << ",label";
    out << '\n';
    for (Eigen::Index t = 0; t < ds.values.cols(); ++t) {
        for (Eigen::Index i = 0; i < ds.values.rows(); ++i) {
            if (i) out << ',';
            out << format_double(ds.values(i, t));
        }
        if (ds.labels) out << ',' << static_cast<int>((*ds.labels)[static_cast<std::size_t>(t)]);
        out << '\n';
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

NormStats minmax_fit(const Dataset& train) {
    if (train.values.cols() < 1) throw InvalidArgument("minmax_fit: empty dataset");
    return {train.values.rowwise().minCoeff(), train.values.rowwise().maxCoeff()};
}

Dataset minmax_apply(const Dataset& ds, const NormStats& stats) {
    if (stats.series_count() != ds.series_count()) {
        throw ShapeError("minmax_apply: stats cover " + std::to_string(stats.series_count()) + " series, dataset has " +
                         std::to_string(ds.series_count()));
    }
    Dataset out = ds;
    for (Eigen::Index i = 0; i < ds.values.rows(); ++i) {
        const double range = stats.max(i) - stats.min(i);
        if (range > 0.0) {
            out.values.row(i) = (ds.values.row(i).array() - stats.min(i)) / range;
        } else {
            out.values.row(i).setZero();
        }
    }
    return out;
}

Dataset aggregate(const Dataset& ds, std::size_t block) {
    if (block == 0) throw InvalidArgument("aggregate: block must be >= 1");
    if (block > ds.length()) {
        throw InvalidArgument("aggregate: block " + std::to_string(block) + " exceeds length " +
                              std::to_string(ds.length()));
    }
    const auto out_len = ds.length() / block;
    const auto b = static_cast<Eigen::Index>(block);
    Dataset out;
    out.names = ds.names;
    out.sample_period = ds.sample_period * static_cast<double>(block);
    out.values.resize(ds.values.rows(), static_cast<Eigen::Index>(out_len));
    for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(out_len); ++k) {
        out.values.col(k) = ds.values.middleCols(k * b, b).rowwise().mean();
    }
    if (ds.labels) {
        std::vector<std::uint8_t> labels(out_len, 0);
        for (std::size_t k = 0; k < out_len; ++k) {
            for (std::size_t j = 0; j < block; ++j) labels[k] |= (*ds.labels)[k * block + j];
        }
        out.labels = std::move(labels);
    }
    return out;
}

std::vector<WindowMatrix> sliding_windows(const Dataset& ds, std::size_t T) {
    if (T == 0) throw InvalidArgument("sliding_windows: T must be >= 1");
    if (T > ds.length()) {
        throw InvalidArgument("sliding_windows: T=" + std::to_string(T) + " exceeds L=" + std::to_string(ds.length()));
    }
    std::vector<WindowMatrix> windows;
    windows.reserve(ds.length() - T + 1);
    for (std::size_t i = 0; i + T <= ds.length(); ++i) {
        windows.push_back({ds.values.middleCols(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(T)), i});
    }
    return windows;
}

std::pair<Dataset, Dataset> split_chronological(const Dataset& ds, double fraction) {
    const auto cut = static_cast<std::size_t>(std::floor(static_cast<double>(ds.length()) * fraction));
    if (!(fraction > 0.0 && fraction < 1.0) || cut == 0 || cut >= ds.length()) {
        throw InvalidArgument("split_chronological: fraction leaves an empty split");
    }
    const auto take = [&ds](std::size_t from, std::size_t count) {
        Dataset part;
        part.names = ds.names;
        part.sample_period = ds.sample_period;
        part.values = ds.values.middleCols(static_cast<Eigen::Index>(from), static_cast<Eigen::Index>(count));
        if (ds.labels) {
            part.labels = std::vector<std::uint8_t>(ds.labels->begin() + static_cast<std::ptrdiff_t>(from),
                                                    ds.labels->begin() + static_cast<std::ptrdiff_t>(from + count));
        }
        return part;
    };
    return {take(0, cut), take(cut, ds.length() - cut)};
}

// ---------------------------------------------------------------------------

const char* to_string(InjectionKind kind) {
    switch (kind) {
        case InjectionKind::Spike: return "spike";
        case InjectionKind::LevelShift: return "level_shift";
        case InjectionKind::CorrelationBreak: return "correlation_break";
    }
    return "?";
}

namespace {

InjectionKind parse_kind(std::string_view text, const std::string& context) {
    if (text == "spike") return InjectionKind::Spike;
    if (text == "level_shift") return InjectionKind::LevelShift;
    if (text == "correlation_break") return InjectionKind::CorrelationBreak;
    throw ParseError(context + ": unknown injection kind '" + std::string(text) + "'");
}

std::size_t parse_count(const std::string& text, const std::string& context) {
    const auto v = parse_int(text, context);
    if (v < 0) throw ParseError(context + ": must be non-negative");
    return static_cast<std::size_t>(v);
}

SeriesShape default_shape(std::size_t i) {
    SeriesShape s;
    s.sine_amplitude = 1.0 + 0.25 * static_cast<double>(i);
    s.sine_phase = 0.7 * static_cast<double>(i);
    return s;
}

}  // namespace

void SynthSpec::validate() const {
    if (n == 0) throw InvalidArgument("synth: n must be >= 1");
    if (L == 0) throw InvalidArgument("synth: L must be >= 1");
    if (!series.empty() && series.size() != n) {
        throw InvalidArgument("synth: " + std::to_string(series.size()) + " series shapes given for n=" +
                              std::to_string(n));
    }
    for (std::size_t k = 0; k < injections.size(); ++k) {
        const auto& inj = injections[k];
        const std::string name = "injection " + std::to_string(k) + " (" + to_string(inj.kind) + ")";
        if (inj.duration < 1) throw InvalidArgument("synth: " + name + ": duration must be >= 1");
        if (inj.start >= L || inj.duration > L - inj.start) {
            throw InvalidArgument("synth: " + name + ": range [" + std::to_string(inj.start) + ", " +
                                  std::to_string(inj.start + inj.duration) + ") lies outside [0, " +
                                  std::to_string(L) + ")");
        }
        if (inj.series >= n) {
            throw InvalidArgument("synth: " + name + ": series " + std::to_string(inj.series) + " out of range");
        }
    }
}

SynthSpec SynthSpec::parse(const std::string& text) {
    const auto kv = KeyValueFile::parse(text);
    SynthSpec spec;
    std::map<std::size_t, SeriesShape> shapes;
    std::map<std::size_t, Injection> injections;
    for (const auto& [key, value] : kv.entries()) {
        const std::string ctx = "synth key '" + key + "'";
        if (key == "n") {
            spec.n = parse_count(value, ctx);
        } else if (key == "L") {
            spec.L = parse_count(value, ctx);
        } else if (key == "sample_period") {
            spec.sample_period = parse_double(value, ctx);
        } else if (key == "seed") {
            spec.seed = parse_uint(value, ctx);
        } else if (key.rfind("series.", 0) == 0 || key.rfind("injection.", 0) == 0) {
            const auto dot1 = key.find('.');
            const auto dot2 = key.find('.', dot1 + 1);
            if (dot2 == std::string::npos) throw ParseError(ctx + ": expected <group>.<index>.<field>");
            const auto idx = parse_count(key.substr(dot1 + 1, dot2 - dot1 - 1), ctx);
            const auto field = key.substr(dot2 + 1);
            if (key[0] == 's') {
                auto [it, fresh] = shapes.try_emplace(idx, default_shape(idx));
                auto& s = it->second;
                if (field == "offset") s.offset = parse_double(value, ctx);
                else if (field == "sine_amplitude") s.sine_amplitude = parse_double(value, ctx);
                else if (field == "sine_period") s.sine_period = parse_double(value, ctx);
                else if (field == "sine_phase") s.sine_phase = parse_double(value, ctx);
                else if (field == "trend") s.trend = parse_double(value, ctx);
                else if (field == "noise") s.noise = parse_double(value, ctx);
                else throw ParseError(ctx + ": unknown series field");
            } else {
                auto& inj = injections[idx];
                if (field == "kind") inj.kind = parse_kind(value, ctx);
                else if (field == "start") inj.start = parse_count(value, ctx);
                else if (field == "duration") inj.duration = parse_count(value, ctx);
                else if (field == "magnitude") inj.magnitude = parse_double(value, ctx);
                else if (field == "series") inj.series = parse_count(value, ctx);
                else throw ParseError(ctx + ": unknown injection field");
            }
        } else {
            throw ParseError("synth: unknown key '" + key + "'");
        }
    }
    if (!shapes.empty()) {
        for (std::size_t i = 0; i < spec.n; ++i) {
            const auto it = shapes.find(i);
            spec.series.push_back(it != shapes.end() ? it->second : default_shape(i));
        }
        if (shapes.rbegin()->first >= spec.n) throw InvalidArgument("synth: series index beyond n");
    }
    for (std::size_t k = 0; !injections.empty() && k <= injections.rbegin()->first; ++k) {
        const auto it = injections.find(k);
        if (it == injections.end()) throw ParseError("synth: injection indices must be contiguous from 0");
        spec.injections.push_back(it->second);
    }
    spec.validate();
    return spec;
}

SynthSpec SynthSpec::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::string SynthSpec::render() const {
    KeyValueFile kv;
    kv.set("n", std::to_string(n));
    kv.set("L", std::to_string(L));
    kv.set("sample_period", format_double(sample_period));
    kv.set("seed", std::to_string(seed));
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto p = "series." + std::to_string(i) + ".";
        kv.set(p + "offset", format_double(series[i].offset));
        kv.set(p + "sine_amplitude", format_double(series[i].sine_amplitude));
        kv.set(p + "sine_period", format_double(series[i].sine_period));
        kv.set(p + "sine_phase", format_double(series[i].sine_phase));
        kv.set(p + "trend", format_double(series[i].trend));
        kv.set(p + "noise", format_double(series[i].noise));
    }
    for (std::size_t k = 0; k < injections.size(); ++k) {
        const auto p = "injection." + std::to_string(k) + ".";
        kv.set(p + "kind", to_string(injections[k].kind));
        kv.set(p + "start", std::to_string(injections[k].start));
        kv.set(p + "duration", std::to_string(injections[k].duration));
        kv.set(p + "magnitude", format_double(injections[k].magnitude));
        kv.set(p + "series", std::to_string(injections[k].series));
    }
    return kv.render();
}

Dataset synth_generate(const SynthSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const auto n = static_cast<Eigen::Index>(spec.n);
    const auto L = static_cast<Eigen::Index>(spec.L);

    Dataset ds;
    ds.sample_period = spec.sample_period;
    ds.values.resize(n, L);
    Matrix sine(n, L);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto shape = spec.series.empty() ? default_shape(static_cast<std::size_t>(i))
                                               : spec.series[static_cast<std::size_t>(i)];
        ds.names.push_back("s" + std::to_string(i));
        for (Eigen::Index t = 0; t < L; ++t) {
            const double td = static_cast<double>(t);
            sine(i, t) = shape.sine_amplitude * std::sin(2.0 * std::numbers::pi * td / shape.sine_period + shape.sine_phase);
            ds.values(i, t) = shape.offset + sine(i, t) + shape.trend * td + shape.noise * rng.gaussian();
        }
    }

    Vector sigma(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double mean = ds.values.row(i).mean();
        const double var = (ds.values.row(i).array() - mean).square().sum() / static_cast<double>(L);
        sigma(i) = std::sqrt(var);
    }

    std::vector<std::uint8_t> labels(spec.L, 0);
    const Matrix baseline = ds.values;
    for (const auto& inj : spec.injections) {
        const auto s = static_cast<Eigen::Index>(inj.series);
        const double d = static_cast<double>(inj.duration);
        for (std::size_t k = 0; k < inj.duration; ++k) {
            const auto t = static_cast<Eigen::Index>(inj.start + k);
            switch (inj.kind) {
                case InjectionKind::Spike: {
                    // Triangular pulse peaking at full magnitude, never below half of it.
                    const double w = 1.0 - 0.5 * std::abs(2.0 * (static_cast<double>(k) + 0.5) / d - 1.0);
                    ds.values(s, t) += inj.magnitude * sigma(s) * w;
                    break;
                }
                case InjectionKind::LevelShift:
                    ds.values(s, t) += inj.magnitude * sigma(s);
                    break;
                case InjectionKind::CorrelationBreak:
                    // Sine component inverted: the series decouples from its siblings.
                    ds.values(s, t) = baseline(s, t) - 2.0 * sine(s, t);
                    break;
            }
            labels[inj.start + k] = 1;
        }
    }
    ds.labels = std::move(labels);
    return ds;
}

}  // namespace netgan

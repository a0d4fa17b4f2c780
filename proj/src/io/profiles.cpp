#include "qsts/io/profiles.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "qsts/io/timeutil.hpp"

namespace qsts {

TimeSeriesDataset TimeSeriesDataset::downsample(int factor) const {
    if (factor < 1) throw ConfigError("downsample factor must be >= 1");
    if (factor == 1) return *this;
    TimeSeriesDataset out;
    out.resolution_minutes = resolution_minutes * factor;
    out.start_timestamp = start_timestamp;
    out.steps = (steps + factor - 1) / factor;
    for (const Series& s : series) {
        Series d;
        d.device_id = s.device_id;
        d.kind = s.kind;
        d.device_index = s.device_index;
        d.values.reserve(out.steps);
        for (long t = 0; t < static_cast<long>(s.values.size()); t += factor)
            d.values.push_back(s.values[t]);
        out.series.push_back(std::move(d));
    }
    return out;
}

void TimeSeriesDataset::validate_against(const NetworkModel& model) const {
    for (const Series& s : series) {
        if (s.device_index < 0) throw UnknownDevice("device '" + s.device_id + "' not in model");
        if (static_cast<long>(s.values.size()) != steps)
            throw IoError("series '" + s.device_id + "' length mismatch");
        switch (s.kind) {
            case ProfileKind::load_p:
            case ProfileKind::load_q:
                if (s.device_index >= static_cast<int>(model.loads.size()))
                    throw UnknownDevice("load '" + s.device_id + "' not in model");
                break;
            case ProfileKind::gen_p:
                if (s.device_index >= static_cast<int>(model.generators.size()))
                    throw UnknownDevice("generator '" + s.device_id + "' not in model");
                break;
            case ProfileKind::intertie_schedule:
                if (s.device_index >= static_cast<int>(model.interties.size()))
                    throw UnknownDevice("intertie '" + s.device_id + "' not in model");
                break;
        }
    }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

TimeSeriesDataset load_profiles(const std::string& path, const NetworkModel& model) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open profile file '" + path + "'");

    std::string header;
    if (!std::getline(in, header)) throw IoError("empty profile file '" + path + "'");
    if (!header.empty() && header.back() == '\r') header.pop_back();
    const auto columns = split_csv(header);
    if (columns.size() < 2) throw IoError("profile file '" + path + "' has no device columns");

    TimeSeriesDataset ds;
    for (std::size_t c = 1; c < columns.size(); ++c) {
        const std::string& key = columns[c];
        const bool reactive = key.size() > 2 && key.compare(key.size() - 2, 2, "/q") == 0;
        const std::string id = reactive ? key.substr(0, key.size() - 2) : key;
        TimeSeriesDataset::Series s;
        s.device_id = id;
        s.device_index = -1;
        for (std::size_t i = 0; i < model.loads.size(); ++i)
            if (model.loads[i].id == id) {
                s.kind = reactive ? ProfileKind::load_q : ProfileKind::load_p;
                s.device_index = static_cast<int>(i);
            }
        if (s.device_index < 0 && !reactive) {
            for (std::size_t i = 0; i < model.generators.size(); ++i)
                if (model.generators[i].id == id) {
                    s.kind = ProfileKind::gen_p;
                    s.device_index = static_cast<int>(i);
                }
            for (std::size_t i = 0; i < model.interties.size(); ++i)
                if (model.interties[i].id == id) {
                    s.kind = ProfileKind::intertie_schedule;
                    s.device_index = static_cast<int>(i);
                }
        }
        if (s.device_index < 0)
            throw UnknownDevice("profile column '" + key + "' matches no model device");
        ds.series.push_back(std::move(s));
    }

    std::string line;
    long row = 0;
    CivilTime prev{};
    long spacing = -1;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_csv(line);
        if (fields.size() != columns.size())
            throw IoError(path + ": row " + std::to_string(row + 2) + " has " +
                          std::to_string(fields.size()) + " fields, expected " +
                          std::to_string(columns.size()));
        const CivilTime ts = parse_iso(fields[0]);
        if (row == 0) {
            ds.start_timestamp = format_iso(ts);
        } else {
            const long gap = minutes_between(prev, ts);
            if (spacing < 0) {
                if (gap <= 0) throw NonUniformSpacing(path + ": non-increasing timestamps at row " +
                                                      std::to_string(row + 2));
                spacing = gap;
            } else if (gap != spacing) {
                if (gap > spacing && gap % spacing == 0)
                    throw GapDetected(path + ": missing rows before " + fields[0]);
                throw NonUniformSpacing(path + ": spacing changed at " + fields[0]);
            }
        }
        prev = ts;
        for (std::size_t c = 1; c < fields.size(); ++c) {
            try {
                std::size_t used = 0;
                const double v = std::stod(fields[c], &used);
                ds.series[c - 1].values.push_back(v);
            } catch (const std::exception&) {
                throw IoError(path + ": bad numeric value '" + fields[c] + "' in column " +
                              columns[c] + " row " + std::to_string(row + 2));
            }
        }
        ++row;
    }
    if (row == 0) throw IoError("profile file '" + path + "' has no data rows");
    ds.steps = row;
    ds.resolution_minutes = spacing > 0 ? static_cast<int>(spacing) : 5;
    ds.validate_against(model);
    return ds;
}

void write_profiles(const TimeSeriesDataset& dataset, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write profile file '" + path + "'");
    out << "timestamp";
    for (const auto& s : dataset.series) {
        out << ',' << s.device_id;
        if (s.kind == ProfileKind::load_q) out << "/q";
    }
    out << '\n';
    CivilTime t = parse_iso(dataset.start_timestamp);
    char buf[32];
    for (long row = 0; row < dataset.steps; ++row) {
        out << format_iso(t);
        for (const auto& s : dataset.series) {
            std::snprintf(buf, sizeof buf, "%.17g", s.values[row]);
            out << ',' << buf;
        }
        out << '\n';
        t = add_minutes(t, dataset.resolution_minutes);
    }
}

}  // namespace qsts

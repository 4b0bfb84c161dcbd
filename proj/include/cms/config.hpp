// System-definition file parser.
//
// INI-style format, one section per bracketed header:
//
//   [graph]          vertices = N; one "edge = i t" line per edge (1-based
//                    vertex ids, edges numbered 0,1,... in file order)
//   [space]          dimension = d; metric = L1|L2|Linf
//   [region V]       one per vertex V (1-based); exactly one of
//                      full = true
//                      lo = a1 ... ad   together with   hi = b1 ... bd
//                      halfspace = n1 ... nd >= c    (or <=)
//   [map E]          one per edge E (0-based); linear = d*d row-major
//                    entries; offset = d entries; optional abs = axis
//                    indices (0-based) receiving |.| before the linear part
//   [probability E]  form = constant (needs value) or sin2 / cos2 (need
//                    scale and shift; profile is scale*trig^2(norm x)+shift)
//   [anchors]        one "anchor = c1 ... cd" line per vertex, in order
//   [system]         rate = declared average contraction rate in (0,1);
//                    optional name; optional bbox = lo1 hi1 ... lod hid
//
// Every numeric token is a decimal literal or a fraction "p/q" evaluated in
// double precision.  '#' starts a comment (full-line or trailing); blank
// lines are ignored.  Errors carry the file label, 1-based line number, and
// the offending field.  Only structure is checked here; hypothesis checks
// (normalization, contraction, region mapping) belong to validation.
#pragma once

#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cms/system.hpp"

namespace cms {

namespace detail {

struct ConfigEntry {
    int line = 0;
    std::string key;
    std::string value;
};

struct ConfigSection {
    int line = 0;
    std::string header;  // e.g. "graph", "map 2"
    std::vector<ConfigEntry> entries;
};

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] inline void config_fail(const std::string& label, int line,
                                     const std::string& message) {
    throw ConfigError(label + ":" + std::to_string(line) + ": " + message);
}

// Decimal literal or "p/q" fraction, whole token must be consumed.
inline double parse_number(const std::string& token, const std::string& label,
                           int line, const std::string& field) {
    const auto bad = [&]() -> double {
        config_fail(label, line,
                    field + ": cannot parse number '" + token + "'");
    };
    if (token.empty()) return bad();
    const std::size_t slash = token.find('/');
    if (slash != std::string::npos) {
        if (slash == 0 || slash + 1 >= token.size() ||
            token.find('/', slash + 1) != std::string::npos)
            return bad();
        const double num = parse_number(token.substr(0, slash), label, line, field);
        const double den = parse_number(token.substr(slash + 1), label, line, field);
        if (den == 0.0)
            config_fail(label, line, field + ": division by zero in '" + token + "'");
        return num / den;
    }
    double out = 0.0;
    const char* first = token.data();
    const char* last = first + token.size();
    const auto res = std::from_chars(first, last, out);
    if (res.ec != std::errc{} || res.ptr != last) return bad();
    return out;
}

inline std::vector<std::string> split_tokens(const std::string& value) {
    std::istringstream in(value);
    std::vector<std::string> out;
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

inline std::vector<double> parse_numbers(const std::string& value,
                                         const std::string& label, int line,
                                         const std::string& field) {
    std::vector<double> out;
    for (const std::string& tok : split_tokens(value))
        out.push_back(parse_number(tok, label, line, field));
    return out;
}

inline long parse_integer(const std::string& token, const std::string& label,
                          int line, const std::string& field) {
    long out = 0;
    const char* first = token.data();
    const char* last = first + token.size();
    const auto res = std::from_chars(first, last, out);
    if (res.ec != std::errc{} || res.ptr != last)
        config_fail(label, line,
                    field + ": cannot parse integer '" + token + "'");
    return out;
}

inline std::vector<ConfigSection> tokenize_config(const std::string& text,
                                                  const std::string& label) {
    std::vector<ConfigSection> sections;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const std::size_t hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        const std::string s = trim(raw);
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']')
                config_fail(label, line, "unterminated section header '" + s + "'");
            ConfigSection sec;
            sec.line = line;
            sec.header = trim(s.substr(1, s.size() - 2));
            if (sec.header.empty())
                config_fail(label, line, "empty section header");
            sections.push_back(std::move(sec));
            continue;
        }
        const std::size_t eq = s.find('=');
        if (eq == std::string::npos)
            config_fail(label, line, "expected 'key = value', got '" + s + "'");
        if (sections.empty())
            config_fail(label, line, "entry before any [section] header");
        ConfigEntry entry;
        entry.line = line;
        entry.key = trim(s.substr(0, eq));
        entry.value = trim(s.substr(eq + 1));
        if (entry.key.empty())
            config_fail(label, line, "missing key before '='");
        sections.back().entries.push_back(std::move(entry));
    }
    return sections;
}

// One section's entries with uniqueness bookkeeping.
class SectionReader {
public:
    SectionReader(const ConfigSection& sec, const std::string& label)
        : sec_(sec), label_(label) {}

    // Unique key; error on duplicates, nullopt when absent.
    std::optional<ConfigEntry> take(const std::string& key) const {
        std::optional<ConfigEntry> found;
        for (const ConfigEntry& e : sec_.entries) {
            if (e.key != key) continue;
            if (found)
                config_fail(label_, e.line,
                            "[" + sec_.header + "] duplicate key '" + key + "'");
            found = e;
        }
        return found;
    }

    ConfigEntry require(const std::string& key) const {
        std::optional<ConfigEntry> found = take(key);
        if (!found)
            config_fail(label_, sec_.line,
                        "[" + sec_.header + "] missing required key '" + key + "'");
        return *found;
    }

    std::vector<ConfigEntry> all(const std::string& key) const {
        std::vector<ConfigEntry> out;
        for (const ConfigEntry& e : sec_.entries)
            if (e.key == key) out.push_back(e);
        return out;
    }

    void allow_only(std::initializer_list<const char*> keys) const {
        for (const ConfigEntry& e : sec_.entries) {
            bool known = false;
            for (const char* k : keys)
                if (e.key == k) known = true;
            if (!known)
                config_fail(label_, e.line,
                            "[" + sec_.header + "] unknown key '" + e.key + "'");
        }
    }

    const ConfigSection& section() const { return sec_; }

private:
    const ConfigSection& sec_;
    const std::string& label_;
};

inline VertexRegion parse_region(const SectionReader& r, int dimension,
                                 const std::string& label) {
    r.allow_only({"full", "lo", "hi", "halfspace"});
    const std::optional<ConfigEntry> full = r.take("full");
    const std::optional<ConfigEntry> lo = r.take("lo");
    const std::optional<ConfigEntry> hi = r.take("hi");
    const std::optional<ConfigEntry> half = r.take("halfspace");
    const int shapes = (full ? 1 : 0) + (lo || hi ? 1 : 0) + (half ? 1 : 0);
    if (shapes != 1)
        config_fail(label, r.section().line,
                    "[" + r.section().header +
                        "] needs exactly one shape: full, lo/hi, or halfspace");
    VertexRegion region;
    if (full) {
        const std::string v = full->value;
        if (v != "true" && v != "yes" && v != "1")
            config_fail(label, full->line, "full: expected true, got '" + v + "'");
        region.shape = FullSpace{};
        return region;
    }
    if (half) {
        const std::vector<std::string> toks = split_tokens(half->value);
        std::size_t sense_at = toks.size();
        for (std::size_t k = 0; k < toks.size(); ++k)
            if (toks[k] == ">=" || toks[k] == "<=") sense_at = k;
        if (sense_at != static_cast<std::size_t>(dimension) ||
            toks.size() != sense_at + 2)
            config_fail(label, half->line,
                        "halfspace: expected '" + std::to_string(dimension) +
                            " normal entries, >= or <=, offset'");
        HalfSpace h;
        for (std::size_t k = 0; k < sense_at; ++k)
            h.normal.push_back(parse_number(toks[k], label, half->line, "halfspace"));
        h.sense = toks[sense_at] == ">=" ? HalfSpaceSense::GreaterEqual
                                         : HalfSpaceSense::LessEqual;
        h.offset = parse_number(toks.back(), label, half->line, "halfspace");
        region.shape = std::move(h);
        return region;
    }
    if (!lo || !hi)
        config_fail(label, r.section().line,
                    "[" + r.section().header + "] box needs both lo and hi");
    AxisBox box;
    box.lo = parse_numbers(lo->value, label, lo->line, "lo");
    box.hi = parse_numbers(hi->value, label, hi->line, "hi");
    region.shape = std::move(box);
    return region;
}

inline EdgeMap parse_map(const SectionReader& r, int dimension,
                         const std::string& label) {
    r.allow_only({"linear", "offset", "abs"});
    EdgeMap m;
    const ConfigEntry linear = r.require("linear");
    m.linear = parse_numbers(linear.value, label, linear.line, "linear");
    const ConfigEntry offset = r.require("offset");
    m.offset = parse_numbers(offset.value, label, offset.line, "offset");
    if (const std::optional<ConfigEntry> abs = r.take("abs")) {
        m.abs_input.assign(static_cast<std::size_t>(dimension), 0);
        for (const std::string& tok : split_tokens(abs->value)) {
            const long axis = parse_integer(tok, label, abs->line, "abs");
            if (axis < 0 || axis >= dimension)
                config_fail(label, abs->line,
                            "abs: axis " + tok + " out of range [0," +
                                std::to_string(dimension - 1) + "]");
            m.abs_input[static_cast<std::size_t>(axis)] = 1;
        }
    }
    return m;
}

inline ProbabilityFunction parse_probability(const SectionReader& r,
                                             const std::string& label) {
    r.allow_only({"form", "value", "scale", "shift"});
    const ConfigEntry form = r.require("form");
    ProbabilityFunction p;
    const auto number = [&](const char* key) {
        const ConfigEntry e = r.require(key);
        return parse_number(e.value, label, e.line, key);
    };
    if (form.value == "constant") {
        p.form = ProbabilityFunction::Form::Constant;
        p.value = number("value");
        if (r.take("scale") || r.take("shift"))
            config_fail(label, form.line,
                        "constant form takes 'value' only, not scale/shift");
    } else if (form.value == "sin2" || form.value == "cos2") {
        p.form = form.value == "sin2" ? ProbabilityFunction::Form::SinSq
                                      : ProbabilityFunction::Form::CosSq;
        p.scale = number("scale");
        p.shift = number("shift");
        if (r.take("value"))
            config_fail(label, form.line,
                        form.value + " form takes scale/shift, not 'value'");
    } else {
        config_fail(label, form.line,
                    "form: expected constant, sin2, or cos2, got '" +
                        form.value + "'");
    }
    return p;
}

}  // namespace detail

// Parses a full system definition from text.  `label` prefixes error
// messages (conventionally the file path).
inline MarkovSystem parse_system_text(const std::string& text,
                                      const std::string& label) {
    using namespace detail;
    const std::vector<ConfigSection> sections = tokenize_config(text, label);

    const ConfigSection* graph_sec = nullptr;
    const ConfigSection* space_sec = nullptr;
    const ConfigSection* anchors_sec = nullptr;
    const ConfigSection* system_sec = nullptr;
    std::map<long, const ConfigSection*> region_secs, map_secs, prob_secs;

    const auto indexed = [&](const ConfigSection& sec, const std::string& kind,
                             std::map<long, const ConfigSection*>& into) {
        const std::string rest = trim(sec.header.substr(kind.size()));
        const long id = parse_integer(rest, label, sec.line, kind + " section id");
        if (!into.emplace(id, &sec).second)
            config_fail(label, sec.line, "duplicate section [" + sec.header + "]");
    };
    const auto unique = [&](const ConfigSection& sec, const ConfigSection*& slot) {
        if (slot)
            config_fail(label, sec.line, "duplicate section [" + sec.header + "]");
        slot = &sec;
    };

    for (const ConfigSection& sec : sections) {
        const std::string& h = sec.header;
        if (h == "graph") unique(sec, graph_sec);
        else if (h == "space") unique(sec, space_sec);
        else if (h == "anchors") unique(sec, anchors_sec);
        else if (h == "system") unique(sec, system_sec);
        else if (h.starts_with("region ")) indexed(sec, "region ", region_secs);
        else if (h.starts_with("map ")) indexed(sec, "map ", map_secs);
        else if (h.starts_with("probability "))
            indexed(sec, "probability ", prob_secs);
        else config_fail(label, sec.line, "unknown section [" + h + "]");
    }
    const auto need = [&](const ConfigSection* sec, const char* name) {
        if (!sec)
            throw ConfigError(label + ": missing section [" + std::string(name) +
                              "]");
    };
    need(graph_sec, "graph");
    need(space_sec, "space");
    need(anchors_sec, "anchors");
    need(system_sec, "system");

    MarkovSystem s;
    s.name = label;

    {
        SectionReader r(*space_sec, label);
        r.allow_only({"dimension", "metric"});
        const ConfigEntry dim = r.require("dimension");
        s.space.dimension = static_cast<int>(
            parse_integer(dim.value, label, dim.line, "dimension"));
        if (s.space.dimension < 1)
            config_fail(label, dim.line, "dimension: must be >= 1");
        const ConfigEntry metric = r.require("metric");
        if (metric.value == "L1") s.space.metric = MetricKind::L1;
        else if (metric.value == "L2") s.space.metric = MetricKind::L2;
        else if (metric.value == "Linf") s.space.metric = MetricKind::Linf;
        else
            config_fail(label, metric.line,
                        "metric: expected L1, L2, or Linf, got '" +
                            metric.value + "'");
    }

    {
        SectionReader r(*graph_sec, label);
        r.allow_only({"vertices", "edge"});
        const ConfigEntry vertices = r.require("vertices");
        s.graph.vertex_count = static_cast<int>(
            parse_integer(vertices.value, label, vertices.line, "vertices"));
        for (const ConfigEntry& e : r.all("edge")) {
            const std::vector<std::string> toks = split_tokens(e.value);
            if (toks.size() != 2)
                config_fail(label, e.line,
                            "edge: expected 'initial terminal', got '" +
                                e.value + "'");
            const long i = parse_integer(toks[0], label, e.line, "edge initial");
            const long t = parse_integer(toks[1], label, e.line, "edge terminal");
            if (i < 1 || i > s.graph.vertex_count || t < 1 ||
                t > s.graph.vertex_count)
                config_fail(label, e.line,
                            "edge: vertex ids must lie in [1," +
                                std::to_string(s.graph.vertex_count) + "]");
            s.graph.edges.push_back({static_cast<int>(i), static_cast<int>(t)});
        }
        if (s.graph.edges.empty())
            config_fail(label, graph_sec->line, "[graph] needs at least one edge");
    }

    for (int v = 1; v <= s.graph.vertex_count; ++v) {
        const auto it = region_secs.find(v);
        if (it == region_secs.end())
            throw ConfigError(label + ": missing section [region " +
                              std::to_string(v) + "]");
        SectionReader r(*it->second, label);
        s.regions.push_back(parse_region(r, s.space.dimension, label));
    }
    for (const auto& [id, sec] : region_secs)
        if (id < 1 || id > s.graph.vertex_count)
            config_fail(label, sec->line,
                        "[" + sec->header + "]: no such vertex (vertices = " +
                            std::to_string(s.graph.vertex_count) + ")");

    const long edge_count = s.graph.edge_count();
    for (long e = 0; e < edge_count; ++e) {
        const auto mit = map_secs.find(e);
        if (mit == map_secs.end())
            throw ConfigError(label + ": missing section [map " +
                              std::to_string(e) + "]");
        SectionReader mr(*mit->second, label);
        s.maps.push_back(parse_map(mr, s.space.dimension, label));

        const auto pit = prob_secs.find(e);
        if (pit == prob_secs.end())
            throw ConfigError(label + ": missing section [probability " +
                              std::to_string(e) + "]");
        SectionReader pr(*pit->second, label);
        s.probabilities.push_back(parse_probability(pr, label));
    }
    for (const auto& [id, sec] : map_secs)
        if (id < 0 || id >= edge_count)
            config_fail(label, sec->line,
                        "[" + sec->header + "]: no such edge (edges = " +
                            std::to_string(edge_count) + ")");
    for (const auto& [id, sec] : prob_secs)
        if (id < 0 || id >= edge_count)
            config_fail(label, sec->line,
                        "[" + sec->header + "]: no such edge (edges = " +
                            std::to_string(edge_count) + ")");

    {
        SectionReader r(*anchors_sec, label);
        r.allow_only({"anchor"});
        for (const ConfigEntry& e : r.all("anchor"))
            s.anchors.push_back(parse_numbers(e.value, label, e.line, "anchor"));
    }

    {
        SectionReader r(*system_sec, label);
        r.allow_only({"rate", "name", "bbox"});
        const ConfigEntry rate = r.require("rate");
        s.declared_rate = parse_number(rate.value, label, rate.line, "rate");
        if (const std::optional<ConfigEntry> name = r.take("name"))
            s.name = name->value;
        if (const std::optional<ConfigEntry> bbox = r.take("bbox")) {
            const std::vector<double> vals =
                parse_numbers(bbox->value, label, bbox->line, "bbox");
            if (vals.size() != 2 * static_cast<std::size_t>(s.space.dimension))
                config_fail(label, bbox->line,
                            "bbox: expected " +
                                std::to_string(2 * s.space.dimension) +
                                " entries (lo hi per axis)");
            for (std::size_t k = 0; k + 1 < vals.size(); k += 2) {
                s.sampling_box.lo.push_back(vals[k]);
                s.sampling_box.hi.push_back(vals[k + 1]);
            }
        }
    }

    try {
        s.finalize();
    } catch (const ConfigError& err) {
        // Structural checks below the parser do not know the source file;
        // attach it so every failure names its origin.
        throw ConfigError(label + ": " + err.what());
    }
    return s;
}

inline MarkovSystem parse_system_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path + ": cannot open file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_system_text(buf.str(), path);
}

}  // namespace cms

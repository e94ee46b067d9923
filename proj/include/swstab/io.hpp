#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <initializer_list>
#include <iterator>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "swstab/certify.hpp"
#include "swstab/error.hpp"
#include "swstab/lmi.hpp"
#include "swstab/markov.hpp"
#include "swstab/matrix.hpp"
#include "swstab/model.hpp"
#include "swstab/simulate.hpp"

namespace swstab::io {

using Json = nlohmann::json;

/// Everything a model file can describe. Finite models carry `model`;
/// countable birth-death chains carry `countable` instead.
struct ModelFile {
    std::string name;
    std::optional<SwitchingModel> model;
    std::vector<std::optional<double>> beta_overrides;
    std::optional<BirthDeathChain> countable;
    Vector thresholds;
    Vector x0;
    std::size_t initial_mode = 0;
};

namespace detail {

[[noreturn]] inline void schema_error(const std::string& where, const std::string& what) {
    throw Error(ErrorKind::InvalidArgument, "schema: " + where + ": " + what);
}

inline void allow_keys(const Json& obj, const std::string& where,
                       std::initializer_list<std::string_view> keys) {
    if (!obj.is_object()) schema_error(where, "expected an object");
    for (const auto& item : obj.items()) {
        if (std::find(keys.begin(), keys.end(), item.key()) == keys.end()) {
            schema_error(where, "unknown field '" + item.key() + "'");
        }
    }
}

inline const Json& required(const Json& obj, const std::string& where, const char* key) {
    const auto it = obj.find(key);
    if (it == obj.end()) schema_error(where, std::string("missing field '") + key + "'");
    return *it;
}

inline double number(const Json& v, const std::string& where) {
    if (!v.is_number()) schema_error(where, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) schema_error(where, "number is not finite");
    return d;
}

inline std::size_t count(const Json& v, const std::string& where) {
    if (!v.is_number_unsigned()) schema_error(where, "expected a nonnegative integer");
    return v.get<std::size_t>();
}

inline Vector vector(const Json& v, const std::string& where) {
    if (!v.is_array()) schema_error(where, "expected an array of numbers");
    Vector out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out.push_back(number(v[i], where + "[" + std::to_string(i) + "]"));
    }
    return out;
}

inline DenseMatrix matrix(const Json& v, const std::string& where) {
    if (!v.is_array() || v.empty()) schema_error(where, "expected a nonempty array of rows");
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < v.size(); ++i) {
        rows.push_back(vector(v[i], where + "[" + std::to_string(i) + "]"));
        if (rows.back().empty() || rows.back().size() != rows.front().size()) {
            schema_error(where, "rows must be nonempty and of equal length");
        }
    }
    return DenseMatrix::from_rows(rows);
}

inline std::vector<DenseMatrix> matrix_list(const Json& v, const std::string& where) {
    if (!v.is_array()) schema_error(where, "expected an array of matrices");
    std::vector<DenseMatrix> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out.push_back(matrix(v[i], where + "[" + std::to_string(i) + "]"));
    }
    return out;
}

inline Json to_json(const DenseMatrix& m) { return Json(m.to_rows()); }

inline Json to_json(const std::vector<DenseMatrix>& ms) {
    Json arr = Json::array();
    for (const auto& m : ms) arr.push_back(to_json(m));
    return arr;
}

inline GammaSpec gamma_spec(const Json& v, const std::string& where) {
    if (!v.is_array()) schema_error(where, "expected an array of terms");
    GammaSpec spec;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const std::string at = where + "[" + std::to_string(i) + "]";
        allow_keys(v[i], at, {"form", "coefficient"});
        const Json& form = required(v[i], at, "form");
        if (!form.is_string()) schema_error(at + ".form", "expected a string");
        GammaTerm term{};
        if (form == "inverse_square") {
            term.form = GammaTerm::Form::InverseSquare;
        } else if (form == "exp_decay") {
            term.form = GammaTerm::Form::ExpDecay;
        } else {
            schema_error(at + ".form", "must be 'inverse_square' or 'exp_decay'");
        }
        term.coefficient = number(required(v[i], at, "coefficient"), at + ".coefficient");
        spec.terms.push_back(term);
    }
    return spec;
}

inline BirthDeathChain birth_death(const Json& v, const std::string& where) {
    allow_keys(v, where,
               {"type", "prefix_birth", "prefix_death", "prefix_beta", "tail_birth",
                "tail_birth_slope", "tail_death", "tail_death_slope", "beta_limit", "beta_scale",
                "beta_slope"});
    const Json& type = required(v, where, "type");
    if (type != "birth_death") schema_error(where + ".type", "only 'birth_death' is supported");
    BirthDeathChain c;
    c.prefix_birth = vector(required(v, where, "prefix_birth"), where + ".prefix_birth");
    c.prefix_death = vector(required(v, where, "prefix_death"), where + ".prefix_death");
    c.prefix_beta = vector(required(v, where, "prefix_beta"), where + ".prefix_beta");
    c.tail_birth = number(required(v, where, "tail_birth"), where + ".tail_birth");
    c.tail_death = number(required(v, where, "tail_death"), where + ".tail_death");
    c.beta_limit = number(required(v, where, "beta_limit"), where + ".beta_limit");
    c.beta_scale = number(required(v, where, "beta_scale"), where + ".beta_scale");
    auto optional_number = [&](const char* key) {
        return v.contains(key) ? number(v[key], where + "." + key) : 0.0;
    };
    c.tail_birth_slope = optional_number("tail_birth_slope");
    c.tail_death_slope = optional_number("tail_death_slope");
    c.beta_slope = optional_number("beta_slope");
    c.validate();
    return c;
}

inline ModeDynamics mode(const Json& v, const std::string& where, std::optional<double>& beta) {
    if (!v.is_object()) schema_error(where, "expected an object");
    beta = v.contains("beta") ? std::optional<double>(number(v["beta"], where + ".beta"))
                              : std::nullopt;
    if (v.contains("fixture")) {
        allow_keys(v, where, {"fixture", "parameter", "beta"});
        const Json& id = v["fixture"];
        if (!id.is_string()) schema_error(where + ".fixture", "expected a string");
        NonlinearMode nl{id.get<std::string>(),
                         v.contains("parameter") ? number(v["parameter"], where + ".parameter") : 0.0};
        if (!fixtures::known(nl.fixture)) {
            throw Error(ErrorKind::UnknownFixture, "no nonlinear fixture named '" + nl.fixture + "'");
        }
        return nl;
    }
    allow_keys(v, where, {"drift", "noise", "input", "beta"});
    LinearMode lin{matrix(required(v, where, "drift"), where + ".drift"), {}, std::nullopt};
    if (v.contains("noise")) lin.noise = matrix_list(v["noise"], where + ".noise");
    if (v.contains("input")) lin.input = matrix(v["input"], where + ".input");
    return lin;
}

inline Json parse_text(const std::string& text, const std::string& origin) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw Error(ErrorKind::InvalidArgument, "parse: " + origin + ": " + e.what());
    }
}

inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::InvalidArgument, "io: cannot open '" + path + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::InvalidArgument, "io: cannot write '" + path + "'");
    out << text;
    if (!out) throw Error(ErrorKind::InvalidArgument, "io: write failed for '" + path + "'");
}

} // namespace detail

/// Parses and validates a model document. Unknown fields are rejected.
inline ModelFile parse_model(const Json& doc) {
    using namespace detail;
    allow_keys(doc, "model",
               {"name", "description", "generator", "modes", "gamma", "thresholds",
                "countable_chain", "x0", "initial_mode"});
    ModelFile mf;
    if (doc.contains("name")) {
        if (!doc["name"].is_string()) schema_error("name", "expected a string");
        mf.name = doc["name"].get<std::string>();
    }
    if (doc.contains("description") && !doc["description"].is_string()) {
        schema_error("description", "expected a string");
    }
    if (doc.contains("thresholds")) mf.thresholds = vector(doc["thresholds"], "thresholds");

    if (doc.contains("countable_chain")) {
        if (doc.contains("generator") || doc.contains("modes")) {
            schema_error("countable_chain", "cannot be combined with generator/modes");
        }
        mf.countable = birth_death(doc["countable_chain"], "countable_chain");
        return mf;
    }

    const Generator g = Generator::validate(matrix(required(doc, "model", "generator"), "generator"));
    const Json& modes = required(doc, "model", "modes");
    if (!modes.is_array()) schema_error("modes", "expected an array");
    std::vector<ModeDynamics> dyn;
    for (std::size_t i = 0; i < modes.size(); ++i) {
        std::optional<double> beta;
        dyn.push_back(mode(modes[i], "modes[" + std::to_string(i) + "]", beta));
        mf.beta_overrides.push_back(beta);
    }
    std::optional<GammaSpec> gamma;
    if (doc.contains("gamma")) gamma = gamma_spec(doc["gamma"], "gamma");
    mf.model.emplace(g, std::move(dyn), gamma);

    mf.x0 = doc.contains("x0") ? vector(doc["x0"], "x0") : Vector(mf.model->dimension(), 1.0);
    if (doc.contains("initial_mode")) mf.initial_mode = count(doc["initial_mode"], "initial_mode");
    return mf;
}

inline ModelFile read_model(const std::string& path) {
    return parse_model(detail::parse_text(detail::read_text(path), path));
}

/// Serializes a finite model; parse_model(model_to_json(m)) reproduces it.
inline Json model_to_json(const ModelFile& mf) {
    using detail::to_json;
    Json doc = Json::object();
    if (!mf.name.empty()) doc["name"] = mf.name;
    if (!mf.thresholds.empty()) doc["thresholds"] = mf.thresholds;
    if (mf.countable) {
        const auto& c = *mf.countable;
        doc["countable_chain"] = {{"type", "birth_death"},
                                  {"prefix_birth", c.prefix_birth},
                                  {"prefix_death", c.prefix_death},
                                  {"prefix_beta", c.prefix_beta},
                                  {"tail_birth", c.tail_birth},
                                  {"tail_birth_slope", c.tail_birth_slope},
                                  {"tail_death", c.tail_death},
                                  {"tail_death_slope", c.tail_death_slope},
                                  {"beta_limit", c.beta_limit},
                                  {"beta_scale", c.beta_scale},
                                  {"beta_slope", c.beta_slope}};
        return doc;
    }
    const SwitchingModel& m = *mf.model;
    doc["generator"] = to_json(m.generator().rates());
    Json modes = Json::array();
    for (std::size_t i = 0; i < m.mode_count(); ++i) {
        Json jm = Json::object();
        if (const auto* lin = std::get_if<LinearMode>(&m.modes()[i])) {
            jm["drift"] = to_json(lin->drift);
            if (!lin->noise.empty()) jm["noise"] = to_json(lin->noise);
            if (lin->input) jm["input"] = to_json(*lin->input);
        } else {
            const auto& nl = std::get<NonlinearMode>(m.modes()[i]);
            jm["fixture"] = nl.fixture;
            jm["parameter"] = nl.parameter;
        }
        if (i < mf.beta_overrides.size() && mf.beta_overrides[i]) jm["beta"] = *mf.beta_overrides[i];
        modes.push_back(jm);
    }
    doc["modes"] = modes;
    if (m.gamma()) {
        Json terms = Json::array();
        for (const auto& t : m.gamma()->terms) {
            terms.push_back({{"form", t.form == GammaTerm::Form::InverseSquare ? "inverse_square"
                                                                                : "exp_decay"},
                             {"coefficient", t.coefficient}});
        }
        doc["gamma"] = terms;
    }
    doc["x0"] = mf.x0;
    doc["initial_mode"] = mf.initial_mode;
    return doc;
}

struct SynthesisFile {
    LmiCandidate candidate;
    std::vector<DenseMatrix> gains;
    Vector margins;
    double averaging = 0.0;
};

inline Json synthesis_to_json(const FeedbackSynthesis& s) {
    using detail::to_json;
    return Json{{"gamma", to_json(s.candidate.gamma)},
                {"y", to_json(s.candidate.y)},
                {"alpha", s.candidate.alpha},
                {"gains", to_json(s.gains)},
                {"margins", s.margins},
                {"averaging", s.averaging}};
}

inline SynthesisFile parse_synthesis(const Json& doc) {
    using namespace detail;
    allow_keys(doc, "synthesis", {"gamma", "y", "alpha", "gains", "margins", "averaging"});
    SynthesisFile f{LmiCandidate{matrix(required(doc, "synthesis", "gamma"), "gamma"),
                                 matrix_list(required(doc, "synthesis", "y"), "y"),
                                 vector(required(doc, "synthesis", "alpha"), "alpha")},
                    matrix_list(required(doc, "synthesis", "gains"), "gains"), {}, 0.0};
    if (doc.contains("margins")) f.margins = vector(doc["margins"], "margins");
    if (doc.contains("averaging")) f.averaging = number(doc["averaging"], "averaging");
    return f;
}

inline SynthesisFile read_synthesis(const std::string& path) {
    return parse_synthesis(detail::parse_text(detail::read_text(path), path));
}

inline void write_json(const std::string& path, const Json& doc) {
    detail::write_text(path, doc.dump(2) + "\n");
}

/// Shortest decimal that reads back to the same double.
inline std::string shortest(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

/// CSV rows path,t,norm_x,mode for every output grid point.
inline void write_csv(std::ostream& out, const PathEnsemble& ens, double horizon) {
    out << "path,t,norm_x,mode\n";
    for (const auto& r : ens.records) {
        for (std::size_t k = 0; k < r.grid_norm.size(); ++k) {
            out << r.index << ',' << shortest(grid_time(horizon, k)) << ',' << shortest(r.grid_norm[k])
                << ',' << r.grid_mode[k] << '\n';
        }
    }
}

inline std::string csv_text(const PathEnsemble& ens, double horizon) {
    std::ostringstream out;
    write_csv(out, ens, horizon);
    return out.str();
}

/// Static SVG: log10 |X_t| per path (upper panel) and the mode trace of path 0 (lower panel).
inline std::string svg_plot(const PathEnsemble& ens, double horizon, std::size_t modes,
                            std::size_t max_paths = 50) {
    constexpr double width = 800.0;
    constexpr double top_h = 400.0;
    constexpr double low_h = 120.0;
    constexpr double pad = 50.0;
    const double height = top_h + low_h + 3.0 * pad;

    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    const std::size_t shown = std::min(max_paths, ens.records.size());
    for (std::size_t p = 0; p < shown; ++p) {
        for (double v : ens.records[p].grid_norm) {
            const double l = std::log10(std::max(v, 1e-300));
            lo = std::min(lo, l);
            hi = std::max(hi, l);
        }
    }
    lo = std::max(std::floor(lo), -30.0);
    hi = std::ceil(hi);
    if (!(hi > lo)) hi = lo + 1.0;

    auto sx = [&](double t) { return pad + (width - 2.0 * pad) * t / horizon; };
    auto sy = [&](double l) {
        return pad + top_h * (1.0 - (std::clamp(l, lo, hi) - lo) / (hi - lo));
    };

    std::ostringstream s;
    s.precision(6);
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << "<text x=\"" << pad << "\" y=\"" << pad - 15 << "\">log10 |X_t| (" << shown
      << " paths)</text>\n";
    for (double l = lo; l <= hi; l += std::max(1.0, std::round((hi - lo) / 8.0))) {
        s << "<line x1=\"" << pad << "\" x2=\"" << width - pad << "\" y1=\"" << sy(l) << "\" y2=\""
          << sy(l) << "\" stroke=\"#ddd\"/>";
        s << "<text x=\"5\" y=\"" << sy(l) + 4 << "\">1e" << l << "</text>\n";
    }
    for (std::size_t p = 0; p < shown; ++p) {
        const auto& r = ens.records[p];
        s << "<polyline fill=\"none\" stroke-width=\"0.8\" stroke=\"hsl(" << (p * 47) % 360
          << ",60%,45%)\" points=\"";
        for (std::size_t k = 0; k < r.grid_norm.size(); ++k) {
            s << sx(grid_time(horizon, k)) << ',' << sy(std::log10(std::max(r.grid_norm[k], 1e-300)))
              << ' ';
        }
        s << "\"/>\n";
    }

    const double base = top_h + 2.0 * pad;
    const double span = modes > 1 ? static_cast<double>(modes - 1) : 1.0;
    auto my = [&](std::size_t m) { return base + low_h * (1.0 - static_cast<double>(m) / span); };
    s << "<text x=\"" << pad << "\" y=\"" << base - 15 << "\">mode of path 0</text>\n";
    for (std::size_t m = 0; m < modes; ++m) {
        s << "<text x=\"5\" y=\"" << my(m) + 4 << "\">" << m << "</text>\n";
    }
    if (!ens.records.empty()) {
        const auto& r = ens.records.front();
        s << "<polyline fill=\"none\" stroke=\"black\" points=\"";
        for (std::size_t k = 0; k < r.grid_mode.size(); ++k) {
            if (k > 0) s << sx(grid_time(horizon, k)) << ',' << my(r.grid_mode[k - 1]) << ' ';
            s << sx(grid_time(horizon, k)) << ',' << my(r.grid_mode[k]) << ' ';
        }
        s << "\"/>\n";
    }
    s << "<text x=\"" << width / 2 << "\" y=\"" << height - 10 << "\">t</text>\n";
    s << "</svg>\n";
    return s.str();
}

} // namespace swstab::io

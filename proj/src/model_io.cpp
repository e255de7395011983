#include "synq/model_io.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

namespace synq {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed,
                    const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw ConfigError(where + ": unknown field '" + key + "'");
    }
}

const json& field(const json& obj, const char* name, const std::string& where) {
    auto it = obj.find(name);
    if (it == obj.end()) throw ConfigError(where + ": missing field '" + name + "'");
    return *it;
}

double number(const json& v, const std::string& where) {
    if (!v.is_number()) throw ConfigError(where + ": expected a number");
    return v.get<double>();
}

Vector number_array(const json& v, const std::string& where) {
    if (!v.is_array()) throw ConfigError(where + ": expected an array of numbers");
    Vector out;
    for (const auto& x : v) out.push_back(number(x, where));
    return out;
}

Marginal marginal_from_json(const json& j, const std::string& where) {
    const std::string type = field(j, "type", where).get<std::string>();
    if (type == "zero") {
        reject_unknown(j, {"type"}, where);
        return marginal::Zero{};
    }
    if (type == "deterministic") {
        reject_unknown(j, {"type", "value"}, where);
        return marginal::Point{number(field(j, "value", where), where + ".value")};
    }
    if (type == "exponential") {
        reject_unknown(j, {"type", "rate"}, where);
        return marginal::Exponential{number(field(j, "rate", where), where + ".rate")};
    }
    if (type == "erlang") {
        reject_unknown(j, {"type", "shape", "rate"}, where);
        const json& shape = field(j, "shape", where);
        if (!shape.is_number_integer()) throw ConfigError(where + ".shape: expected an integer");
        return marginal::Erlang{shape.get<int>(), number(field(j, "rate", where), where + ".rate")};
    }
    throw ConfigError(where + ": unknown marginal type '" + type + "'");
}

JumpLaw law_from_json(const json& j, const std::string& where) {
    reject_unknown(j, {"type", "parameters"}, where);
    const std::string type = field(j, "type", where).get<std::string>();
    const json& p = field(j, "parameters", where);
    const std::string pw = where + ".parameters";
    if (type == "deterministic") {
        reject_unknown(p, {"jump"}, pw);
        return law::Deterministic{number_array(field(p, "jump", pw), pw + ".jump")};
    }
    if (type == "independent") {
        reject_unknown(p, {"marginals"}, pw);
        const json& ms = field(p, "marginals", pw);
        if (!ms.is_array()) throw ConfigError(pw + ".marginals: expected an array");
        law::IndependentMarginals im;
        for (std::size_t i = 0; i < ms.size(); ++i) {
            im.marginals.push_back(
                marginal_from_json(ms[i], pw + ".marginals[" + std::to_string(i) + "]"));
        }
        return im;
    }
    if (type == "comonotone") {
        reject_unknown(p, {"weights", "rate"}, pw);
        return law::ComonotoneLinear{number_array(field(p, "weights", pw), pw + ".weights"),
                                     number(field(p, "rate", pw), pw + ".rate")};
    }
    throw ConfigError(where + ": unknown law type '" + type + "'");
}

json marginal_to_json(const Marginal& m) {
    if (std::holds_alternative<marginal::Zero>(m)) return {{"type", "zero"}};
    if (const auto* p = std::get_if<marginal::Point>(&m)) {
        return {{"type", "deterministic"}, {"value", p->value}};
    }
    if (const auto* e = std::get_if<marginal::Exponential>(&m)) {
        return {{"type", "exponential"}, {"rate", e->rate}};
    }
    const auto& e = std::get<marginal::Erlang>(m);
    return {{"type", "erlang"}, {"shape", e.shape}, {"rate", e.rate}};
}

}  // namespace

LevyModel model_from_json(const json& j) {
    reject_unknown(j, {"n", "drift", "sigma", "components"}, "model");
    LevyModel m;
    const json& n = field(j, "n", "model");
    if (!n.is_number_integer() || n.get<long long>() < 1) {
        throw ConfigError("model.n: expected a positive integer");
    }
    m.n = n.get<std::size_t>();
    m.drift = number_array(field(j, "drift", "model"), "model.drift");
    m.sigma = j.contains("sigma") ? number(j["sigma"], "model.sigma") : 0.0;
    if (j.contains("components")) {
        const json& cs = j["components"];
        if (!cs.is_array()) throw ConfigError("model.components: expected an array");
        for (std::size_t i = 0; i < cs.size(); ++i) {
            const std::string where = "model.components[" + std::to_string(i) + "]";
            reject_unknown(cs[i], {"rate", "law"}, where);
            JumpComponent c;
            c.rate = number(field(cs[i], "rate", where), where + ".rate");
            c.law = law_from_json(field(cs[i], "law", where), where + ".law");
            m.components.push_back(std::move(c));
        }
    }
    return m;
}

json model_to_json(const LevyModel& model) {
    json comps = json::array();
    for (const auto& c : model.components) {
        json law;
        if (const auto* d = std::get_if<law::Deterministic>(&c.law)) {
            law = {{"type", "deterministic"}, {"parameters", {{"jump", d->jump}}}};
        } else if (const auto* im = std::get_if<law::IndependentMarginals>(&c.law)) {
            json ms = json::array();
            for (const auto& mg : im->marginals) ms.push_back(marginal_to_json(mg));
            law = {{"type", "independent"}, {"parameters", {{"marginals", ms}}}};
        } else {
            const auto& cl = std::get<law::ComonotoneLinear>(c.law);
            law = {{"type", "comonotone"},
                   {"parameters", {{"weights", cl.weights}, {"rate", cl.rate}}}};
        }
        comps.push_back({{"rate", c.rate}, {"law", law}});
    }
    return {{"n", model.n}, {"drift", model.drift}, {"sigma", model.sigma}, {"components", comps}};
}

LevyModel parse_model(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("model: invalid JSON: ") + e.what());
    }
    try {
        return model_from_json(j);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("model: ") + e.what());
    }
}

LevyModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open model file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_model(ss.str());
}

}  // namespace synq

#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "synq/model.hpp"

namespace synq {

/// Model file schema (unknown fields are rejected):
///
///   { "n": 2, "drift": [-1, 0], "sigma": 0,
///     "components": [
///       { "rate": 1, "law": { "type": "independent",
///                             "parameters": { "marginals": [
///                                 {"type": "exponential", "rate": 4},
///                                 {"type": "zero"} ] } } } ] }
///
/// law types: "deterministic" {jump: [..]}, "independent" {marginals: [..]},
/// "comonotone" {weights: [..], rate: r}. Marginal types: "zero",
/// "deterministic" {value}, "exponential" {rate}, "erlang" {shape, rate}.
///
/// Throws ConfigError on schema violations; structural assumptions are left to
/// validate().
LevyModel model_from_json(const nlohmann::json& j);
nlohmann::json model_to_json(const LevyModel& model);

LevyModel load_model(const std::filesystem::path& path);
LevyModel parse_model(const std::string& text);

}  // namespace synq

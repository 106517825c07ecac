#pragma once

// Line-delimited JSON messages exchanged with an external evaluator.
//   -> {"type":"init"}
//   <- {"type":"init_ok","dim":d,"patches":P,"baseline_quality":q0,
//       "baseline_realism":r0,"blur":B,"supports_gradient":false[,"window":W]}
//   -> {"type":"eval","id":N,"z":[...]}
//   <- {"type":"eval_ok","id":N,"quality":q,"realism_patches":[...]}
//   -> {"type":"grad","id":N,"z":[...]}
//   <- {"type":"grad_ok","id":N,"g":[...][,"g_realism":[...]]}
//   <- {"type":"error","id":N,"code":"..."[,"message":"..."]}
//   -> {"type":"shutdown"}

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include <json.hpp>

#include "noisejector/criterion/criterion.hpp"
#include "noisejector/criterion/types.hpp"

namespace noisejector::eval::protocol {

using Json = nlohmann::json;

struct InitInfo {
    std::size_t dimension = 0;
    std::size_t patches = 0;
    Baseline baseline;
    bool supports_gradient = false;
    // Optional cap on in-flight requests declared by the evaluator.
    std::optional<std::size_t> window;
};

struct ErrorReply {
    std::optional<std::uint64_t> id;
    std::string code;
    std::string message;
};

std::string encode_init();
std::string encode_eval(std::uint64_t id, std::span<const double> z);
std::string encode_grad(std::uint64_t id, std::span<const double> z);
std::string encode_shutdown();

// Each parser throws Protocol on malformed input.
Json parse_line(std::string_view line);
std::string message_type(const Json& message);
std::uint64_t message_id(const Json& message);
std::optional<std::uint64_t> optional_id(const Json& message);

InitInfo parse_init_ok(const Json& message);
// Checks the patch count and that every score is finite (NonFiniteValue).
RawEvaluation parse_eval_ok(const Json& message, std::size_t patches);
// A lone "g" is taken as the gradient of quality with zero realism gradient.
criterion::RawGradient parse_grad_ok(const Json& message, std::size_t dimension);
ErrorReply parse_error(const Json& message);

}  // namespace noisejector::eval::protocol

#include "noisejector/eval/protocol.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "noisejector/error.hpp"

namespace noisejector::eval::protocol {

namespace {

Json vector_json(std::span<const double> z) {
    Json out = Json::array();
    for (double v : z) out.push_back(v);
    return out;
}

const Json& field(const Json& message, const char* key) {
    const auto it = message.find(key);
    if (it == message.end())
        fail(ErrorCode::Protocol, fmt::format("'{}' message lacks field '{}'", message_type(message), key));
    return *it;
}

double number_field(const Json& message, const char* key) {
    const Json& value = field(message, key);
    if (value.is_null()) return std::numeric_limits<double>::quiet_NaN();  // how NaN/Inf serialize
    if (!value.is_number())
        fail(ErrorCode::Protocol, fmt::format("field '{}' must be a number", key));
    return value.get<double>();
}

std::size_t count_field(const Json& message, const char* key) {
    const Json& value = field(message, key);
    if (!value.is_number_unsigned() || value.get<std::uint64_t>() == 0)
        fail(ErrorCode::Protocol, fmt::format("field '{}' must be a positive integer", key));
    return value.get<std::size_t>();
}

std::vector<double> number_array(const Json& value, const char* key) {
    if (!value.is_array()) fail(ErrorCode::Protocol, fmt::format("field '{}' must be an array", key));
    std::vector<double> out;
    out.reserve(value.size());
    for (const Json& item : value) {
        if (item.is_null()) {
            out.push_back(std::numeric_limits<double>::quiet_NaN());
            continue;
        }
        if (!item.is_number()) fail(ErrorCode::Protocol, fmt::format("field '{}' must hold numbers only", key));
        out.push_back(item.get<double>());
    }
    return out;
}

void require_type(const Json& message, std::string_view expected) {
    const std::string type = message_type(message);
    if (type != expected) fail(ErrorCode::Protocol, fmt::format("expected '{}' message, got '{}'", expected, type));
}

}  // namespace

std::string encode_init() { return R"({"type":"init"})"; }

std::string encode_eval(std::uint64_t id, std::span<const double> z) {
    return Json{{"type", "eval"}, {"id", id}, {"z", vector_json(z)}}.dump();
}

std::string encode_grad(std::uint64_t id, std::span<const double> z) {
    return Json{{"type", "grad"}, {"id", id}, {"z", vector_json(z)}}.dump();
}

std::string encode_shutdown() { return R"({"type":"shutdown"})"; }

Json parse_line(std::string_view line) {
    Json message = Json::parse(line, nullptr, false);
    if (message.is_discarded())
        fail(ErrorCode::Protocol, fmt::format("malformed line from evaluator: {}", line.substr(0, 200)));
    if (!message.is_object()) fail(ErrorCode::Protocol, "evaluator message is not a JSON object");
    return message;
}

std::string message_type(const Json& message) {
    const auto it = message.find("type");
    if (it == message.end() || !it->is_string()) fail(ErrorCode::Protocol, "evaluator message lacks a string 'type'");
    return it->get<std::string>();
}

std::optional<std::uint64_t> optional_id(const Json& message) {
    const auto it = message.find("id");
    if (it == message.end() || it->is_null()) return std::nullopt;
    if (!it->is_number_unsigned()) fail(ErrorCode::Protocol, "message id must be a non-negative integer");
    return it->get<std::uint64_t>();
}

std::uint64_t message_id(const Json& message) {
    const auto id = optional_id(message);
    if (!id) fail(ErrorCode::Protocol, fmt::format("'{}' message lacks an id", message_type(message)));
    return *id;
}

InitInfo parse_init_ok(const Json& message) {
    require_type(message, "init_ok");
    InitInfo info;
    info.dimension = count_field(message, "dim");
    info.patches = count_field(message, "patches");
    info.baseline.quality0 = number_field(message, "baseline_quality");
    info.baseline.realism0 = number_field(message, "baseline_realism");
    info.baseline.blur = number_field(message, "blur");
    if (const auto it = message.find("supports_gradient"); it != message.end()) {
        if (!it->is_boolean()) fail(ErrorCode::Protocol, "field 'supports_gradient' must be a boolean");
        info.supports_gradient = it->get<bool>();
    }
    if (message.contains("window")) info.window = count_field(message, "window");
    if (!std::isfinite(info.baseline.quality0) || !std::isfinite(info.baseline.realism0) ||
        !std::isfinite(info.baseline.blur))
        fail(ErrorCode::Protocol, "handshake baseline values must be finite");
    return info;
}

RawEvaluation parse_eval_ok(const Json& message, std::size_t patches) {
    require_type(message, "eval_ok");
    RawEvaluation out;
    out.quality = number_field(message, "quality");
    out.realism_patches = number_array(field(message, "realism_patches"), "realism_patches");
    if (out.realism_patches.size() != patches)
        fail(ErrorCode::Protocol, fmt::format("eval_ok carries {} patch scores, handshake declared {}",
                                              out.realism_patches.size(), patches));
    if (!std::isfinite(out.quality) || !all_finite(out.realism_patches))
        fail(ErrorCode::NonFiniteValue, fmt::format("evaluator returned non-finite scores for id {}",
                                                    message_id(message)));
    return out;
}

criterion::RawGradient parse_grad_ok(const Json& message, std::size_t dimension) {
    require_type(message, "grad_ok");
    criterion::RawGradient g;
    g.quality = number_array(field(message, "g"), "g");
    if (message.contains("g_realism")) g.realism = number_array(message.at("g_realism"), "g_realism");
    else g.realism.assign(dimension, 0.0);
    if (g.quality.size() != dimension || g.realism.size() != dimension)
        fail(ErrorCode::Protocol, fmt::format("grad_ok gradient length differs from dimension {}", dimension));
    if (!all_finite(g.quality) || !all_finite(g.realism))
        fail(ErrorCode::NonFiniteValue, "evaluator returned a non-finite gradient");
    return g;
}

ErrorReply parse_error(const Json& message) {
    require_type(message, "error");
    ErrorReply out;
    out.id = optional_id(message);
    if (const auto it = message.find("code"); it != message.end() && it->is_string()) out.code = it->get<std::string>();
    if (const auto it = message.find("message"); it != message.end() && it->is_string())
        out.message = it->get<std::string>();
    return out;
}

}  // namespace noisejector::eval::protocol

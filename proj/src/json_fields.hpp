#pragma once

// Strict field access for the JSON formats we parse. The error type is a template
// parameter so wire bodies raise ProtocolError, run files RunStoreError and config
// files ConfigError.

#include <optional>
#include <string>

#include <json.hpp>

namespace wander::detail {

template <class Error, class T>
T required(const nlohmann::json& j, const char* key, const char* context) {
    if (!j.is_object()) {
        throw Error(std::string(context) + ": expected a JSON object");
    }
    const auto it = j.find(key);
    if (it == j.end()) {
        throw Error(std::string(context) + ": missing field '" + key + "'");
    }
    try {
        return it->template get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string(context) + ": field '" + key + "' has the wrong type (" + e.what() + ")");
    }
}

template <class Error, class T>
std::optional<T> optional_field(const nlohmann::json& j, const char* key, const char* context) {
    if (!j.is_object()) {
        throw Error(std::string(context) + ": expected a JSON object");
    }
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    try {
        return it->template get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string(context) + ": field '" + key + "' has the wrong type (" + e.what() + ")");
    }
}

template <class Error, class T>
T field_or(const nlohmann::json& j, const char* key, T fallback, const char* context) {
    return optional_field<Error, T>(j, key, context).value_or(std::move(fallback));
}

}  // namespace wander::detail

#pragma once

#include <json.hpp>

#include <string>

namespace trellis {

/// Property values are a closed tagged union: null, boolean, integer, float,
/// text, list, map.  nlohmann::json is exactly that union with structural
/// equality and a canonical (sorted-key) dump, so it is used directly.
using Value = nlohmann::json;

/// Map of property name -> Value, key-ordered.  Represented as a json object
/// so that property maps serialize canonically.
using ValueMap = nlohmann::json;

inline ValueMap empty_map() { return Value::object(); }

/// Tag names used by the gateway's structural parameter validation.
enum class ValueType { Null, Boolean, Integer, Float, Text, List, Map, Any };

inline bool value_matches(ValueType t, const Value& v) {
    switch (t) {
    case ValueType::Null: return v.is_null();
    case ValueType::Boolean: return v.is_boolean();
    case ValueType::Integer: return v.is_number_integer();
    case ValueType::Float: return v.is_number_float() || v.is_number_integer();
    case ValueType::Text: return v.is_string();
    case ValueType::List: return v.is_array();
    case ValueType::Map: return v.is_object();
    case ValueType::Any: return true;
    }
    return false;
}

inline const char* value_type_name(ValueType t) {
    switch (t) {
    case ValueType::Null: return "null";
    case ValueType::Boolean: return "boolean";
    case ValueType::Integer: return "integer";
    case ValueType::Float: return "float";
    case ValueType::Text: return "text";
    case ValueType::List: return "list";
    case ValueType::Map: return "map";
    case ValueType::Any: return "any";
    }
    return "?";
}

}  // namespace trellis

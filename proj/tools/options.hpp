#pragma once

// Option registry shared by the lmdetect subcommands. Every option is bound
// to a variable; the registry can fill those variables from a JSON config
// (before the command line is parsed, so flags win) and dump the resolved
// values back out.

#include <algorithm>
#include <functional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

namespace lmdetect::cli {

using Json = nlohmann::json;

class OptionRegistry {
 public:
  explicit OptionRegistry(CLI::App* command) : command_(command) {}

  template <class T>
  CLI::Option* add(const std::string& flag, T& var, const std::string& help) {
    std::string key = flag;
    std::replace(key.begin(), key.end(), '-', '_');
    auto* opt = command_->add_option("--" + flag, var, help)->capture_default_str();
    if constexpr (requires { typename T::value_type; } && !std::is_same_v<T, std::string>) {
      opt->delimiter(',');
    }
    save_.push_back([&var, key](Json& j) { j[key] = var; });
    load_.push_back([&var, key](const Json& j) {
      if (auto it = j.find(key); it != j.end()) var = it->template get<T>();
    });
    keys_.push_back(key);
    return opt;
  }

  /// Assigns every known key present in `config`; unknown keys are reported.
  std::vector<std::string> load(const Json& config) const {
    for (const auto& f : load_) f(config);
    std::vector<std::string> unknown;
    for (const auto& [k, v] : config.items()) {
      if (k != "command" && std::find(keys_.begin(), keys_.end(), k) == keys_.end()) unknown.push_back(k);
    }
    return unknown;
  }

  Json dump() const {
    Json j = Json::object();
    for (const auto& f : save_) f(j);
    return j;
  }

  CLI::App* command() const noexcept { return command_; }

 private:
  CLI::App* command_;
  std::vector<std::function<void(Json&)>> save_;
  std::vector<std::function<void(const Json&)>> load_;
  std::vector<std::string> keys_;
};

}  // namespace lmdetect::cli

// Copyright 2026 The attnscene Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdlib>
#include <future>
#include <semaphore>

#include <httplib.h>
#include <json.hpp>

#include "attnscene/prompt.hpp"

namespace attnscene {

/// Chat-completions endpoint settings. The API key itself is only ever read
/// from the environment variable named here.
struct EndpointConfig {
  std::string url = "http://127.0.0.1:8000/v1/chat/completions";
  std::string model = "gpt-4o-mini";
  std::string api_key_env = "OPENAI_API_KEY";
  std::string api_key_header = "Authorization";
  std::string api_key_prefix = "Bearer ";
  int timeout_ms = 30000;
  int retries = 2;
  double temperature = 0.0;
  int max_in_flight = 4;
};

inline nlohmann::json chat_request_body(const PromptBundle& bundle, const EndpointConfig& cfg) {
  return {{"model", cfg.model},
          {"messages",
           nlohmann::json::array({{{"role", "system"}, {"content", bundle.system_text}},
                                  {{"role", "user"}, {"content", bundle.user_text}}})},
          {"temperature", cfg.temperature}};
}

namespace http_detail {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

inline ParsedUrl parse_url(const std::string& url) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) throw InvalidArgument("endpoint url is not http(s): " + url);
  return {m[1].str(), m[2].matched ? m[2].str() : std::string("/")};
}

inline void apply_timeout(httplib::Client& cli, int timeout_ms) {
  const time_t sec = timeout_ms / 1000;
  const time_t usec = static_cast<time_t>(timeout_ms % 1000) * 1000;
  cli.set_connection_timeout(sec, usec);
  cli.set_read_timeout(sec, usec);
  cli.set_write_timeout(sec, usec);
}

}  // namespace http_detail

/// POSTs the bundle in chat wire format and parses the reply's
/// choices[0].message.content. Transport failures and 5xx responses are
/// retried `retries` times; 4xx fails at once.
inline ModelOutput external_respond(const PromptBundle& bundle, const EndpointConfig& cfg) {
  const auto url = http_detail::parse_url(cfg.url);
  const std::string body = chat_request_body(bundle, cfg).dump();
  httplib::Headers headers;
  if (const char* key = std::getenv(cfg.api_key_env.c_str()); key && *key)
    headers.emplace(cfg.api_key_header, cfg.api_key_prefix + key);

  std::string last_error = "no attempt made";
  int last_status = 0;
  std::string last_body;
  for (int attempt = 0; attempt <= std::max(0, cfg.retries); ++attempt) {
    httplib::Client cli(url.origin);
    http_detail::apply_timeout(cli, cfg.timeout_ms);
    auto res = cli.Post(url.path, headers, body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      last_status = 0;
      continue;
    }
    if (res->status >= 500) {
      last_status = res->status;
      last_body = res->body;
      continue;
    }
    if (res->status < 200 || res->status >= 300) throw EndpointError(res->status, res->body);

    nlohmann::json reply;
    try {
      reply = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
      throw ProtocolError(std::string("reply is not JSON: ") + e.what());
    }
    const auto* content = [&]() -> const nlohmann::json* {
      if (!reply.is_object() || !reply.contains("choices") || !reply["choices"].is_array() ||
          reply["choices"].empty())
        return nullptr;
      const auto& msg = reply["choices"][0];
      if (!msg.contains("message") || !msg["message"].contains("content")) return nullptr;
      return &msg["message"]["content"];
    }();
    if (!content || !content->is_string())
      throw ProtocolError("reply lacks choices[0].message.content");
    return parse_output(content->get<std::string>(), bundle.k);
  }
  if (last_status != 0) throw EndpointError(last_status, last_body);
  throw TransportError("request to " + cfg.url + " failed: " + last_error);
}

struct RespondResult {
  std::optional<ModelOutput> output;
  std::string error;
  std::exception_ptr exception;
};

/// Sends every bundle with at most `cfg.max_in_flight` requests outstanding.
/// Each request gets its own client; results keep input order.
inline std::vector<RespondResult> respond_all(std::span<const PromptBundle> bundles,
                                              const EndpointConfig& cfg) {
  std::counting_semaphore<> slots(std::max(1, cfg.max_in_flight));
  std::vector<std::future<RespondResult>> pending;
  pending.reserve(bundles.size());
  for (const auto& b : bundles) {
    pending.push_back(std::async(std::launch::async, [&slots, &b, &cfg] {
      slots.acquire();
      RespondResult r;
      try {
        r.output = external_respond(b, cfg);
      } catch (const std::exception& e) {
        r.error = e.what();
        r.exception = std::current_exception();
      }
      slots.release();
      return r;
    }));
  }
  std::vector<RespondResult> out;
  out.reserve(pending.size());
  for (auto& f : pending) out.push_back(f.get());
  return out;
}

}  // namespace attnscene

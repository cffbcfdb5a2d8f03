#include "govdec/service.hpp"

#include <algorithm>
#include <cmath>
#include <regex>

#include <httplib.h>

#include "govdec/error.hpp"

namespace govdec {

namespace {

enum class Caller : std::uint8_t { None, Operator, Reviewer };

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, {{"error", message}, {"status", status}});
}

bool safe_name(const std::string& s) { return std::regex_match(s, std::regex("[A-Za-z0-9_.-]+")) && s != ".."; }

std::string sse_frame(const TraceEvent& ev) {
  return "id: " + std::to_string(ev.sequence) + "\nevent: " + ev.event_type + "\ndata: " + ev.to_json().dump() +
         "\n\n";
}

}  // namespace

std::vector<std::string> qa_sample(const std::vector<std::string>& ids, double rate, const std::string& seed) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw ContractError("sample rate must lie in [0, 1]");
  std::vector<std::pair<std::string, std::string>> ranked;
  ranked.reserve(ids.size());
  for (const auto& id : ids) ranked.emplace_back(sha256_hex(seed + ":" + id), id);
  std::sort(ranked.begin(), ranked.end());
  const auto take = static_cast<std::size_t>(std::llround(rate * static_cast<double>(ids.size())));
  std::vector<std::string> out;
  for (std::size_t i = 0; i < take && i < ranked.size(); ++i) out.push_back(ranked[i].second);
  return out;
}

Service::Service(Engine& engine, ServiceOptions options)
    : engine_(engine),
      opts_(std::move(options)),
      server_(std::make_unique<httplib::Server>()),
      stopping_(std::make_shared<std::atomic<bool>>(false)) {
  routes();
}

Service::~Service() { stop(); }

bool Service::listen() { return server_->listen(opts_.host, opts_.port); }

int Service::bind_any_port() { return server_->bind_to_any_port(opts_.host); }

bool Service::listen_after_bind() { return server_->listen_after_bind(); }

void Service::stop() {
  stopping_->store(true);
  if (server_) server_->stop();
}

bool Service::running() const { return server_->is_running(); }

std::vector<std::string> Service::run_qa_sample(double rate, const std::string& seed) {
  std::vector<std::string> eligible;
  for (const auto& s : engine_.list()) {
    if (s.value("status", std::string()) == "completed" && s.value("tier", json(nullptr)) == "SPOT_CHECK") {
      eligible.push_back(s.at("instance_id").get<std::string>());
    }
  }
  auto picked = qa_sample(eligible, rate, seed);
  for (const auto& id : picked) {
    engine_.store().put("qa_queue", id, {{"instance_id", id}, {"seed", seed}, {"rate", rate}, {"state", "queued"}});
  }
  return picked;
}

void Service::routes() {
  auto& srv = *server_;

  auto caller_of = [this](const httplib::Request& req) {
    std::string token;
    const std::string auth = req.get_header_value("Authorization");
    if (auth.rfind("Bearer ", 0) == 0) token = auth.substr(7);
    // EventSource cannot set headers.
    if (token.empty() && req.has_param("access_token")) token = req.get_param_value("access_token");
    if (token.empty()) return Caller::None;
    if (!opts_.reviewer_token.empty() && token == opts_.reviewer_token) return Caller::Reviewer;
    if (!opts_.operator_token.empty() && token == opts_.operator_token) return Caller::Operator;
    return Caller::None;
  };
  auto actor_of = [](const httplib::Request& req, Caller c) {
    Actor a;
    a.role = c == Caller::Reviewer ? Role::Reviewer : Role::Operator;
    a.id = req.get_header_value("X-Actor");
    if (a.id.empty()) a.id = c == Caller::Reviewer ? "reviewer" : "operator";
    return a;
  };

  // Wraps a handler with authentication and error mapping.
  auto guarded = [this, caller_of](auto handler) {
    return [caller_of, handler](const httplib::Request& req, httplib::Response& res) {
      const Caller c = caller_of(req);
      if (c == Caller::None) {
        res.set_header("WWW-Authenticate", "Bearer");
        send_error(res, 401, "missing or unknown bearer token");
        return;
      }
      try {
        handler(req, res, c);
      } catch (const NotFound& e) {
        send_error(res, 404, e.what());
      } catch (const IllegalStateTransition& e) {
        send_error(res, 409, e.what());
      } catch (const UnauthorizedActor& e) {
        send_error(res, 403, e.what());
      } catch (const json::exception& e) {
        send_error(res, 400, std::string("bad request body: ") + e.what());
      } catch (const ConfigError& e) {
        send_error(res, 400, e.what());
      } catch (const CaseSchemaError& e) {
        send_error(res, 400, e.what());
      } catch (const ContractError& e) {
        send_error(res, 400, e.what());
      } catch (const std::exception& e) {
        send_error(res, 500, e.what());
      }
    };
  };

  srv.Get("/health", [](const httplib::Request&, httplib::Response& res) { send_json(res, 200, {{"ok", true}}); });

  srv.Post("/api/start", guarded([this](const httplib::Request& req, httplib::Response& res, Caller c) {
             if (c != Caller::Operator) throw UnauthorizedActor("only operators submit cases");
             const json body = json::parse(req.body);
             const std::string domain = body.at("domain").get<std::string>();
             const std::string workflow = body.value("workflow", domain);
             if (!safe_name(domain) || !safe_name(workflow)) throw ContractError("bad domain or workflow name");
             StartRequest sr;
             sr.case_body = body.at("case");
             sr.domain_path = opts_.config_root / "domains" / (domain + ".yaml");
             sr.workflow_path = opts_.config_root / "workflows" / (workflow + ".yaml");
             if (!std::filesystem::exists(sr.domain_path)) throw NotFound("unknown domain " + domain);
             if (!std::filesystem::exists(sr.workflow_path)) throw NotFound("unknown workflow " + workflow);
             const std::string id = engine_.start(sr, true);
             send_json(res, 200, {{"instance_id", id}, {"stream_url", "/instances/" + id + "/trace"}});
           }));

  srv.Get("/api/instances", guarded([this](const httplib::Request&, httplib::Response& res, Caller) {
            send_json(res, 200, engine_.list());
          }));

  srv.Get(R"(/api/instances/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res, Caller) {
            send_json(res, 200, engine_.get(req.matches[1])->to_json());
          }));

  srv.Get(R"(/api/instances/([^/]+)/verify)",
          guarded([this](const httplib::Request& req, httplib::Response& res, Caller) {
            auto inst = engine_.get(req.matches[1]);
            json v = verify_ledger_file(inst->ledger_path()).to_json();
            json transitions = json::array();
            for (const auto& e : inst->ledger_entries()) {
              if (e.entry_type == EntryType::HitlTransition) {
                transitions.push_back({{"index", e.index}, {"from", e.content.value("from", "")},
                                       {"to", e.content.value("to", "")}, {"actor", e.content.value("actor", "")}});
              }
            }
            v["hitl_transitions"] = std::move(transitions);
            send_json(res, 200, v);
          }));

  srv.Post(R"(/api/instances/([^/]+)/review/([a-z_]+))",
           guarded([this, actor_of](const httplib::Request& req, httplib::Response& res, Caller c) {
             const json body = req.body.empty() ? json::object() : json::parse(req.body);
             const std::string id = req.matches[1];
             const std::string action = req.matches[2];
             engine_.get(id);
             send_json(res, 200, engine_.review(id, action, actor_of(req, c), body, false));
           }));

  srv.Post(R"(/api/instances/([^/]+)/deredact)",
           guarded([this, actor_of](const httplib::Request& req, httplib::Response& res, Caller c) {
             const json body = json::parse(req.body);
             auto inst = engine_.get(req.matches[1]);
             send_json(res, 200, {{"text", deredact(body.at("text").get<std::string>(), inst->redaction_map(),
                                                    actor_of(req, c))}});
           }));

  srv.Get("/api/queue", guarded([this](const httplib::Request&, httplib::Response& res, Caller) {
            std::vector<json> rows;
            for (const auto& id : engine_.ids()) {
              auto inst = engine_.get(id);
              if (inst->status() != InstanceStatus::Suspended) continue;
              for (const auto& o : inst->orders()) {
                if (o.mode == DelegationMode::FireAndForget || !sla_armed(o.state)) continue;
                const auto d = inst->determination();
                rows.push_back({{"instance_id", id},
                                {"order_id", o.order_id},
                                {"domain", inst->spec().domain.domain_id},
                                {"tier", d ? json(std::string(to_string(d->tier_applied))) : json(nullptr)},
                                {"hitl_state", std::string(to_string(o.state))},
                                {"sla_deadline", o.sla_deadline ? json(*o.sla_deadline) : json(nullptr)},
                                {"disposition", d ? json(d->disposition) : json(nullptr)}});
              }
            }
            std::stable_sort(rows.begin(), rows.end(), [](const json& a, const json& b) {
              const auto da = a["sla_deadline"].is_number() ? a["sla_deadline"].get<std::int64_t>() : INT64_MAX;
              const auto db = b["sla_deadline"].is_number() ? b["sla_deadline"].get<std::int64_t>() : INT64_MAX;
              return da < db;
            });
            send_json(res, 200, rows);
          }));

  srv.Post("/api/qa-sample", guarded([this](const httplib::Request& req, httplib::Response& res, Caller c) {
             if (c != Caller::Operator) throw UnauthorizedActor("only operators run the QA sampler");
             const json body = req.body.empty() ? json::object() : json::parse(req.body);
             send_json(res, 200, {{"sampled", run_qa_sample(body.value("rate", opts_.qa_rate),
                                                             body.value("seed", opts_.qa_seed))}});
           }));

  srv.Post("/api/kill", guarded([this](const httplib::Request& req, httplib::Response& res, Caller c) {
             if (c != Caller::Operator) throw UnauthorizedActor("only operators flip kill switches");
             const json body = json::parse(req.body);
             const auto scope = parse_kill_scope(body.at("scope").get<std::string>());
             if (!scope) throw ContractError("unknown kill scope");
             const std::string target = body.value("target", std::string());
             if (body.value("engaged", true)) {
               engine_.kill_switches().engage(*scope, target, body.value("reason", std::string("operator")));
             } else {
               engine_.kill_switches().release(*scope, target);
             }
             json out = json::array();
             for (const auto& k : engine_.kill_switches().engaged()) out.push_back(k.to_json());
             send_json(res, 200, {{"engaged", out}});
           }));

  auto trace = guarded([this](const httplib::Request& req, httplib::Response& res, Caller) {
    const std::string id = req.matches[1];
    engine_.get(id);
    std::uint64_t last = 0;
    const std::string header = req.get_header_value("Last-Event-ID");
    const std::string from = header.empty() ? req.get_param_value("last_event_id") : header;
    if (!from.empty()) last = std::stoull(from);
    auto cursor = std::make_shared<std::uint64_t>(last);
    auto stopping = stopping_;
    const auto heartbeat = opts_.heartbeat;
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider(
        "text/event-stream", [this, id, cursor, stopping, heartbeat](std::size_t, httplib::DataSink& sink) {
          if (stopping->load()) {
            sink.done();
            return true;
          }
          const auto events = engine_.events_after(id, *cursor, heartbeat);
          if (events.empty()) {
            const std::string beat = ": heartbeat\n\n";
            return sink.write(beat.data(), beat.size());
          }
          for (const auto& ev : events) {
            const std::string frame = sse_frame(ev);
            if (!sink.write(frame.data(), frame.size())) return false;
            *cursor = ev.sequence;
            if (closes_stream(ev)) {
              sink.done();
              return true;
            }
          }
          return true;
        });
  });
  srv.Get(R"(/instances/([^/]+)/trace)", trace);
  srv.Get(R"(/api/instances/([^/]+)/trace)", trace);

  if (!opts_.static_dir.empty() && std::filesystem::is_directory(opts_.static_dir)) {
    srv.set_mount_point("/", opts_.static_dir.string());
  }
}

}  // namespace govdec

#include "service.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <condition_variable>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <regex>
#include <semaphore>
#include <set>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "common.hpp"
#include "qsurr/campaign.hpp"
#include "qsurr/error.hpp"

namespace qsurr::tools {

namespace fs = std::filesystem;
using json = nlohmann::json;

ServiceConfig apply_env(ServiceConfig config) {
  auto env = [](const char* name) -> std::optional<std::string> {
    const char* v = std::getenv(name);
    if (!v || !*v) return std::nullopt;
    return std::string(v);
  };
  if (auto v = env("QSURR_BIND")) config.bind = *v;
  if (auto v = env("QSURR_PORT")) config.port = std::stoi(*v);
  if (auto v = env("QSURR_DATA_DIR")) config.data_dir = *v;
  if (auto v = env("QSURR_MAX_FITS")) config.max_fits = std::stoul(*v);
  if (auto v = env("QSURR_TOKEN")) config.token = *v;
  if (auto v = env("QSURR_STATIC_DIR")) config.static_dir = *v;
  return config;
}

namespace {

constexpr std::ptrdiff_t kMaxFits = 64;

struct HttpError {
  int status;
  std::string code;
  std::string message;
  json detail = nullptr;
};

int status_for(Errc code) {
  switch (code) {
    case Errc::wrong_state:
    case Errc::terminated:
    case Errc::bits_mismatch:
      return 409;
    default:
      return 400;
  }
}

std::string message_of(const Error& e) {
  std::string_view what = e.what();
  const auto name = errc_name(e.code());
  if (what.substr(0, name.size()) == name && what.size() > name.size() + 2)
    what.remove_prefix(name.size() + 2);
  return std::string(what);
}

json error_body(const HttpError& e) {
  return {{"code", e.code}, {"message", e.message}, {"detail", e.detail}};
}

json error_body(const Error& e) {
  return {{"code", std::string(errc_name(e.code()))}, {"message", message_of(e)}, {"detail", nullptr}};
}

bool valid_id(const std::string& id) {
  static const std::regex pattern("[A-Za-z0-9_-][A-Za-z0-9_.-]{0,63}");
  return std::regex_match(id, pattern);
}

struct Job {
  std::uint64_t id = 0;
  // running, done, failed or terminated
  std::string status;
  json error = nullptr;
};

struct Slot {
  std::mutex mu;
  Campaign campaign;
  std::optional<Job> job;

  bool busy() const { return job && job->status == "running"; }
};

json suggestion_json(const Suggestion& s) {
  return {{"bits", s.bits.to_string()},
          {"estimated_ain", s.estimated_ain},
          {"source", std::string(source_name(s.source))}};
}

json summary(const Campaign& c, bool busy) {
  json j = {{"id", c.id},
            {"n", c.bit_count()},
            {"state", std::string(state_name(c.state))},
            {"iteration", c.iteration},
            {"best", {{"bits", c.best_bits.to_string()}, {"ain", c.best_ain}}},
            {"experiments", c.dataset.real_count()},
            {"log_size", c.log.size()},
            {"revision", c.revision},
            {"busy", busy}};
  j["pending"] = c.pending ? suggestion_json(*c.pending) : json(nullptr);
  return j;
}

}  // namespace

struct Service::Impl {
  ServiceConfig config;
  int lock_fd = -1;
  fs::path campaign_dir;
  fs::path events_path;

  std::mutex map_mu;
  std::map<std::string, std::shared_ptr<Slot>> slots;

  std::mutex events_mu;
  int events_fd = -1;

  std::mutex idem_mu;
  std::map<std::string, std::pair<int, std::string>> idempotent;

  std::counting_semaphore<kMaxFits> fits{1};
  std::mutex jobs_mu;
  std::condition_variable jobs_cv;
  std::size_t running_jobs = 0;
  std::uint64_t next_job = 1;
  std::vector<std::jthread> workers;

  httplib::Server server;
  std::thread listener;

  explicit Impl(ServiceConfig cfg)
      : config(std::move(cfg)),
        fits(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(config.max_fits, 1, kMaxFits))) {
    fs::create_directories(config.data_dir);
    campaign_dir = config.data_dir / "campaigns";
    fs::create_directories(campaign_dir);
    events_path = config.data_dir / "events.jsonl";

    const auto lock_path = config.data_dir / "lock";
    lock_fd = ::open(lock_path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (lock_fd < 0) throw std::runtime_error("cannot open " + lock_path.string());
    if (::flock(lock_fd, LOCK_EX | LOCK_NB) != 0) {
      ::close(lock_fd);
      lock_fd = -1;
      throw Error(Errc::bad_params,
                  "data directory " + config.data_dir.string() + " is owned by another service");
    }
    recover();
    events_fd = ::open(events_path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (events_fd < 0) throw std::runtime_error("cannot open " + events_path.string());
    routes();
  }

  ~Impl() {
    server.stop();
    if (listener.joinable()) listener.join();
    workers.clear();
    if (events_fd >= 0) ::close(events_fd);
    if (lock_fd >= 0) ::close(lock_fd);
  }

  // ---- persistence ----

  fs::path file_for(const std::string& id) const { return campaign_dir / (id + ".json"); }

  void append_event(const json& event) {
    const std::string line = event.dump() + "\n";
    std::lock_guard lock(events_mu);
    std::size_t off = 0;
    while (off < line.size()) {
      const auto n = ::write(events_fd, line.data() + off, line.size() - off);
      if (n < 0) throw std::runtime_error("event log write failed");
      off += static_cast<std::size_t>(n);
    }
    ::fsync(events_fd);
  }

  void commit(const Campaign& c, json event) {
    event["campaign_id"] = c.id;
    event["revision"] = c.revision;
    append_event(event);
    write_file_atomic(file_for(c.id), c.to_json());
  }

  void recover() {
    for (const auto& entry : fs::directory_iterator(campaign_dir)) {
      if (entry.path().extension() != ".json") continue;
      auto c = Campaign::from_json(read_file(entry.path()));
      auto slot = std::make_shared<Slot>();
      slot->campaign = std::move(c);
      slots[slot->campaign.id] = slot;
    }
    if (!fs::exists(events_path)) return;

    std::set<std::string> touched;
    std::ifstream in(events_path);
    std::string line;
    while (std::getline(in, line)) {
      json ev;
      try {
        ev = json::parse(line);
      } catch (const json::exception&) {
        break;  // torn final write
      }
      const std::string op = ev.value("op", "");
      if (op == "idempotency") {
        idempotent[ev.at("key").get<std::string>()] = {ev.at("status").get<int>(),
                                                       ev.at("body").get<std::string>()};
        continue;
      }
      const auto id = ev.at("campaign_id").get<std::string>();
      const auto revision = ev.at("revision").get<std::uint64_t>();
      if (op == "create") {
        if (!slots.count(id)) {
          auto slot = std::make_shared<Slot>();
          slot->campaign = Campaign::from_json(ev.at("campaign").dump());
          slots[id] = slot;
          touched.insert(id);
        }
        continue;
      }
      auto it = slots.find(id);
      if (it == slots.end()) continue;
      Campaign& c = it->second->campaign;
      if (c.revision >= revision) continue;
      if (op == "suggest") {
        try {
          suggest_next(c);
        } catch (const Error& e) {
          if (e.code() != Errc::terminated) throw;
        }
      } else if (op == "record") {
        record_result(c, BitVector::from_string(ev.at("bits").get<std::string>()),
                      ev.at("ain").get<double>(), ev.at("out_of_band").get<bool>());
        c.log.back().timestamp = ev.at("timestamp").get<std::string>();
      }
      if (c.revision != revision)
        throw std::runtime_error("event log replay diverged for campaign " + id);
      touched.insert(id);
    }
    for (const auto& id : touched) write_file_atomic(file_for(id), slots[id]->campaign.to_json());
  }

  // ---- helpers ----

  std::shared_ptr<Slot> find(const std::string& id) {
    std::lock_guard lock(map_mu);
    auto it = slots.find(id);
    if (it == slots.end()) throw HttpError{404, "NotFound", "no campaign '" + id + "'", id};
    return it->second;
  }

  static void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static json parse_body(const httplib::Request& req) {
    try {
      auto j = json::parse(req.body.empty() ? std::string("{}") : req.body);
      if (!j.is_object()) throw HttpError{400, "ParseError", "request body must be a JSON object"};
      return j;
    } catch (const json::exception& e) {
      throw HttpError{400, "ParseError", "request body is not valid JSON", e.what()};
    }
  }

  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  Handler guarded(Handler h) {
    return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
      try {
        h(req, res);
      } catch (const HttpError& e) {
        send_json(res, e.status, error_body(e));
      } catch (const Error& e) {
        send_json(res, status_for(e.code()), error_body(e));
      } catch (const json::exception& e) {
        send_json(res, 400, error_body(HttpError{400, "ParseError", "malformed request field", e.what()}));
      } catch (const std::exception& e) {
        send_json(res, 500, error_body(HttpError{500, "Internal", e.what()}));
      }
    };
  }

  // Replays a stored response for a repeated Idempotency-Key, otherwise runs
  // the handler and remembers successful responses.
  Handler idempotent_handler(Handler h) {
    return guarded([this, h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
      const auto key = req.get_header_value("Idempotency-Key");
      if (key.empty()) return h(req, res);
      const std::string scoped = req.method + " " + req.path + " " + key;
      {
        std::lock_guard lock(idem_mu);
        if (auto it = idempotent.find(scoped); it != idempotent.end()) {
          res.status = it->second.first;
          res.set_content(it->second.second, "application/json");
          res.set_header("Idempotent-Replay", "true");
          return;
        }
      }
      h(req, res);
      if (res.status >= 200 && res.status < 300) {
        std::lock_guard lock(idem_mu);
        idempotent[scoped] = {res.status, res.body};
        append_event({{"op", "idempotency"}, {"key", scoped}, {"status", res.status}, {"body", res.body}});
      }
    });
  }

  // ---- routes ----

  void routes() {
    server.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
      if (config.token.empty() || req.path.rfind("/campaigns", 0) != 0)
        return httplib::Server::HandlerResponse::Unhandled;
      if (req.get_header_value("Authorization") == "Bearer " + config.token)
        return httplib::Server::HandlerResponse::Unhandled;
      send_json(res, 401, error_body(HttpError{401, "Unauthorized", "missing or wrong bearer token"}));
      return httplib::Server::HandlerResponse::Handled;
    });
    if (!config.static_dir.empty()) server.set_mount_point("/", config.static_dir.string());

    server.Post("/campaigns", idempotent_handler([this](const auto& req, auto& res) { create(req, res); }));
    server.Get("/campaigns", guarded([this](const auto&, auto& res) { list(res); }));
    server.Get(R"(/campaigns/([^/]+))", guarded([this](const auto& req, auto& res) {
                 auto slot = find(req.matches[1]);
                 std::lock_guard lock(slot->mu);
                 auto j = summary(slot->campaign, slot->busy());
                 j["campaign"] = json::parse(slot->campaign.to_json());
                 send_json(res, 200, j);
               }));
    server.Post(R"(/campaigns/([^/]+)/suggest)",
                idempotent_handler([this](const auto& req, auto& res) { suggest(req, res); }));
    server.Get(R"(/campaigns/([^/]+)/suggestion)",
               guarded([this](const auto& req, auto& res) { suggestion(req, res); }));
    server.Post(R"(/campaigns/([^/]+)/results)",
                idempotent_handler([this](const auto& req, auto& res) { results(req, res); }));
    server.Get(R"(/campaigns/([^/]+)/trace)", guarded([this](const auto& req, auto& res) {
                 auto slot = find(req.matches[1]);
                 std::lock_guard lock(slot->mu);
                 const auto c = json::parse(slot->campaign.to_json());
                 send_json(res, 200, {{"id", slot->campaign.id}, {"entries", c.at("log")}});
               }));
    server.Get(R"(/campaigns/([^/]+)/metrics)", guarded([this](const auto& req, auto& res) {
                 auto slot = find(req.matches[1]);
                 std::lock_guard lock(slot->mu);
                 json series = json::array(), best = json::array();
                 for (const auto& m : metric_series(slot->campaign))
                   series.push_back({{"iteration", m.iteration},
                                     {"experiment_count", m.experiment_count},
                                     {"mse_pct", m.mse_pct},
                                     {"cae_pct", m.cae_pct}});
                 for (const auto& b : best_trajectory(slot->campaign))
                   best.push_back({{"experiment_count", b.experiment_count},
                                   {"real_ain", b.real_ain},
                                   {"best_so_far", b.best_so_far}});
                 send_json(res, 200, {{"id", slot->campaign.id}, {"series", series}, {"best", best}});
               }));
    server.Get(R"(/campaigns/([^/]+)/export)", guarded([this](const auto& req, auto& res) {
                 auto slot = find(req.matches[1]);
                 std::lock_guard lock(slot->mu);
                 res.status = 200;
                 res.set_content(export_log_csv(slot->campaign), "text/csv");
               }));
  }

  void create(const httplib::Request& req, httplib::Response& res) {
    const auto body = parse_body(req);
    FactorSchema schema;
    if (body.contains("schema"))
      schema = FactorSchema::from_json(body.at("schema").dump());
    else if (body.contains("bits"))
      schema = FactorSchema::raw_bits(body.at("bits").get<std::size_t>());
    else
      throw HttpError{400, "BadParams", "either schema or bits is required"};

    std::vector<std::pair<BitVector, double>> seeds;
    if (body.contains("seeds_csv")) {
      seeds = parse_seed_csv(body.at("seeds_csv").get<std::string>());
    } else if (body.contains("seeds")) {
      for (const auto& s : body.at("seeds"))
        seeds.emplace_back(BitVector::from_string(s.at("bits").get<std::string>()),
                           s.at("ain").get<double>());
    }
    const auto config = body.contains("config") ? config_from_json(body.at("config").dump())
                                                : CampaignConfig{};
    const auto seed = body.value("seed", std::uint64_t{0});

    std::lock_guard lock(map_mu);
    std::string id = body.value("id", "");
    if (id.empty()) {
      std::size_t k = slots.size() + 1;
      do id = "campaign-" + std::to_string(k++);
      while (slots.count(id));
    }
    if (!valid_id(id)) throw HttpError{400, "BadParams", "campaign id must match [A-Za-z0-9_.-]{1,64}", id};
    if (slots.count(id)) throw HttpError{409, "AlreadyExists", "campaign '" + id + "' exists", id};

    auto slot = std::make_shared<Slot>();
    slot->campaign = init_campaign(id, schema, config, seeds, seed);
    commit(slot->campaign, {{"op", "create"}, {"campaign", json::parse(slot->campaign.to_json())}});
    slots[id] = slot;
    send_json(res, 201, summary(slot->campaign, false));
  }

  void list(httplib::Response& res) {
    std::vector<std::shared_ptr<Slot>> all;
    {
      std::lock_guard lock(map_mu);
      for (auto& [id, s] : slots) all.push_back(s);
    }
    json out = json::array();
    for (auto& s : all) {
      std::lock_guard lock(s->mu);
      out.push_back(summary(s->campaign, s->busy()));
    }
    send_json(res, 200, {{"campaigns", out}});
  }

  void suggest(const httplib::Request& req, httplib::Response& res) {
    auto slot = find(req.matches[1]);
    std::lock_guard lock(slot->mu);
    const auto& c = slot->campaign;
    if (slot->busy())
      throw HttpError{409, "WrongState", "a suggestion job is already running", slot->job->id};
    if (c.state == CampaignState::awaiting_result)
      throw HttpError{409, "WrongState", "campaign is awaiting a result for the pending suggestion",
                      suggestion_json(*c.pending)};
    if (c.state == CampaignState::terminated)
      throw HttpError{409, "Terminated", "campaign has terminated", nullptr};

    Job job;
    {
      std::lock_guard jl(jobs_mu);
      job.id = next_job++;
      ++running_jobs;
    }
    job.status = "running";
    slot->job = job;
    Campaign work = c;
    std::lock_guard jl(jobs_mu);
    workers.emplace_back([this, slot, work = std::move(work), id = job.id]() mutable {
      run_job(slot, std::move(work), id);
    });
    send_json(res, 202,
              {{"job_id", job.id},
               {"status", "running"},
               {"poll", "/campaigns/" + slot->campaign.id + "/suggestion"}});
  }

  void run_job(std::shared_ptr<Slot> slot, Campaign work, std::uint64_t id) {
    std::string status = "done";
    json error = nullptr;
    fits.acquire();
    try {
      suggest_next(work);
    } catch (const Error& e) {
      if (e.code() == Errc::terminated) {
        status = "terminated";
      } else {
        status = "failed";
        error = error_body(e);
      }
    } catch (const std::exception& e) {
      status = "failed";
      error = error_body(HttpError{500, "Internal", e.what()});
    }
    fits.release();
    {
      std::lock_guard lock(slot->mu);
      if (status != "failed") {
        try {
          commit(work, {{"op", "suggest"}});
          slot->campaign = std::move(work);
        } catch (const std::exception& e) {
          status = "failed";
          error = error_body(HttpError{500, "Internal", e.what()});
        }
      }
      slot->job = Job{id, status, error};
    }
    std::lock_guard jl(jobs_mu);
    --running_jobs;
    jobs_cv.notify_all();
  }

  void suggestion(const httplib::Request& req, httplib::Response& res) {
    auto slot = find(req.matches[1]);
    std::lock_guard lock(slot->mu);
    const auto& c = slot->campaign;
    json job_id = slot->job ? json(slot->job->id) : json(nullptr);
    if (slot->busy()) return send_json(res, 202, {{"status", "running"}, {"job_id", job_id}});
    if (slot->job && slot->job->status == "failed")
      return send_json(res, 200, {{"status", "failed"}, {"job_id", job_id}, {"error", slot->job->error}});
    if (c.state == CampaignState::terminated)
      return send_json(res, 200, {{"status", "terminated"}, {"job_id", job_id}});
    if (c.pending) {
      auto j = suggestion_json(*c.pending);
      j["status"] = "ready";
      j["job_id"] = job_id;
      return send_json(res, 200, j);
    }
    throw HttpError{404, "NoSuggestion", "no suggestion has been requested", c.id};
  }

  void results(const httplib::Request& req, httplib::Response& res) {
    auto slot = find(req.matches[1]);
    const auto body = parse_body(req);
    std::lock_guard lock(slot->mu);
    if (slot->busy())
      throw HttpError{423, "Busy", "a suggestion job is running for this campaign", slot->job->id};
    if (!body.contains("bits") || !body.contains("ain"))
      throw HttpError{400, "BadParams", "bits and ain are required"};
    const auto bits = BitVector::from_string(body.at("bits").get<std::string>());
    if (!body.at("ain").is_number()) throw HttpError{400, "NonFiniteAin", "ain must be a number"};
    const double ain = body.at("ain").get<double>();
    const bool oob = body.value("out_of_band", false);

    Campaign next = slot->campaign;
    record_result(next, bits, ain, oob);
    commit(next, {{"op", "record"},
                  {"bits", bits.to_string()},
                  {"ain", ain},
                  {"out_of_band", oob},
                  {"timestamp", next.log.back().timestamp}});
    slot->campaign = std::move(next);
    auto j = summary(slot->campaign, false);
    j["entry"] = json::parse(slot->campaign.to_json()).at("log").back();
    send_json(res, 200, j);
  }
};

Service::Service(ServiceConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}

Service::~Service() = default;

int Service::start() {
  auto& s = impl_->server;
  int port = impl_->config.port;
  if (port == 0) {
    port = s.bind_to_any_port(impl_->config.bind);
  } else if (!s.bind_to_port(impl_->config.bind, port)) {
    port = -1;
  }
  if (port < 0)
    throw std::runtime_error("cannot bind " + impl_->config.bind + ":" +
                             std::to_string(impl_->config.port));
  impl_->listener = std::thread([&s] { s.listen_after_bind(); });
  s.wait_until_ready();
  return port;
}

void Service::wait() {
  if (impl_->listener.joinable()) impl_->listener.join();
}

void Service::stop() { impl_->server.stop(); }

void Service::drain() {
  std::unique_lock lock(impl_->jobs_mu);
  impl_->jobs_cv.wait(lock, [&] { return impl_->running_jobs == 0; });
}

}  // namespace qsurr::tools

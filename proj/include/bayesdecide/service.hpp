#pragma once

// JSON-over-HTTP front end. Routing and handlers live in Service::handle,
// which is a pure function of (registry snapshot, request) apart from
// POST /experiments; attach() binds it to a cpp-httplib server.

#include "bayesdecide/analysis.hpp"

#include <httplib.h>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace bayesdecide {

struct ApiError {
  int status = 500;
  std::string code;
  std::string message;
  std::vector<std::string> violations;

  json to_json() const {
    json j{{"status", status}, {"code", code}, {"message", message}};
    if (!violations.empty())
      j["violations"] = violations;
    return j;
  }
};

struct ApiRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
};

struct ApiResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

struct ServiceOptions {
  std::string cors_origin = "*";
  double level = 0.95;
  std::uint64_t default_seed = 0;
};

class Service {
public:
  explicit Service(Registry &registry, ServiceOptions options = {})
      : registry_(registry), options_(std::move(options)) {}

  ApiResponse handle(const ApiRequest &req) const {
    try {
      return route(req);
    } catch (const ApiErrorException &e) {
      return error(e.error);
    } catch (const NotFoundError &e) {
      return error({404, "not_found", e.what(), {}});
    } catch (const ValidationError &e) {
      return error({422, "validation_failed", e.what(), e.violations()});
    } catch (const DuplicateIdError &e) {
      return error({409, "duplicate_id", e.what(), {}});
    } catch (const FormatError &e) {
      return error({422, "bad_format", e.what(), {}});
    } catch (const json::exception &e) {
      return error({422, "bad_format", e.what(), {}});
    } catch (const NumericalError &e) {
      return error({422, "numerical_failure", e.what(), {}});
    } catch (const std::invalid_argument &e) {
      return error({422, "invalid_argument", e.what(), {}});
    } catch (const std::out_of_range &e) {
      return error({422, "invalid_argument", e.what(), {}});
    } catch (const std::exception &e) {
      return error({500, "internal_error", e.what(), {}});
    }
  }

  /// Registers the routes and CORS handling on `server`.
  void attach(httplib::Server &server) const {
    auto forward = [this](const httplib::Request &hreq, httplib::Response &hres) {
      ApiRequest req{hreq.method, hreq.path, {}, hreq.body};
      for (const auto &[k, v] : hreq.params)
        req.query.emplace(k, v);
      const auto res = handle(req);
      hres.status = res.status;
      hres.set_content(res.body, res.content_type);
    };
    server.set_default_headers({{"Access-Control-Allow-Origin", options_.cors_origin},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                {"Access-Control-Allow-Headers", "Content-Type"}});
    server.Get(".*", forward);
    server.Post(".*", forward);
    server.Options(".*", [](const httplib::Request &, httplib::Response &res) { res.status = 204; });
  }

private:
  struct ApiErrorException {
    ApiError error;
  };

  [[noreturn]] static void fail(int status, std::string code, std::string message) {
    throw ApiErrorException{{status, std::move(code), std::move(message), {}}};
  }

  static ApiResponse ok(const json &j, int status = 200) { return {status, report::render(j)}; }

  static ApiResponse error(const ApiError &e) { return {e.status, report::render(e.to_json())}; }

  static json parse_body(const std::string &body) {
    try {
      return json::parse(body);
    } catch (const json::parse_error &e) {
      fail(400, "bad_json", e.what());
    }
  }

  static ShrinkageLevel parse_k(const std::string &text) {
    try {
      return ShrinkageLevel::parse(text);
    } catch (const std::invalid_argument &e) {
      fail(400, "bad_k", e.what());
    }
  }

  static ShrinkageLevel k_from_body(const json &body) {
    if (!body.contains("k"))
      return ShrinkageLevel::moderate();
    const auto &k = body["k"];
    if (k.is_string())
      return parse_k(k.get<std::string>());
    if (k.is_number())
      return parse_k(io::format_double(k.get<double>()));
    fail(400, "bad_k", "k must be a number or \"inf\"");
  }

  template <class T>
  static T required(const json &body, const char *field) {
    if (!body.is_object() || !body.contains(field))
      throw ValidationError({std::string("missing field '") + field + "'"});
    try {
      return body[field].get<T>();
    } catch (const json::exception &) {
      throw ValidationError({std::string("field '") + field + "' has the wrong type"});
    }
  }

  ApiResponse route(const ApiRequest &req) const {
    const auto parts = segments(req.path);
    if (req.method == "GET" && parts == std::vector<std::string>{"health"})
      return ok({{"status", "ok"}, {"experiments", registry_.snapshot()->size()}});
    if (!parts.empty() && parts[0] == "experiments") {
      if (parts.size() == 1 && req.method == "GET")
        return list_experiments();
      if (parts.size() == 1 && req.method == "POST")
        return create_experiment(req);
      if (parts.size() == 2 && req.method == "GET")
        return get_experiment(parts[1]);
      if (parts.size() == 3 && parts[2] == "posterior" && req.method == "GET")
        return get_posterior(parts[1], req);
    }
    if (req.method == "POST" && parts == std::vector<std::string>{"decide"})
      return post_decide(req);
    if (req.method == "POST" && parts == std::vector<std::string>{"decision-space"})
      return post_decision_space(req);
    fail(404, "no_route", req.method + " " + req.path + " is not an endpoint");
  }

  static std::vector<std::string> segments(const std::string &path) {
    std::vector<std::string> out;
    for (auto &s : io::split(path, '/'))
      if (!s.empty())
        out.push_back(std::move(s));
    return out;
  }

  ApiResponse list_experiments() const {
    json arr = json::array();
    for (const auto &r : *registry_.snapshot())
      arr.push_back(io::record_to_json(r));
    return ok({{"experiments", std::move(arr)}});
  }

  ApiResponse get_experiment(const std::string &id) const {
    auto snap = registry_.snapshot();
    const auto *r = find_record(*snap, id);
    if (!r)
      throw NotFoundError("unknown experiment '" + id + "'");
    return ok(io::record_to_json(*r));
  }

  ApiResponse create_experiment(const ApiRequest &req) const {
    const auto body = parse_body(req.body);
    const auto rec = io::record_from_json(body);
    registry_.append(rec);
    return ok({{"id", rec.id}}, 201);
  }

  ApiResponse get_posterior(const std::string &id, const ApiRequest &req) const {
    auto it = req.query.find("k");
    const auto k = parse_k(it == req.query.end() ? "1" : it->second);
    auto snap = registry_.snapshot();
    const auto ep = posterior_for(*snap, id, k, options_.level);
    return ok(report::posterior_json(ep.summary, ep.record.schema, ep.record.id));
  }

  ApiResponse post_decide(const ApiRequest &req) const {
    const auto body = parse_body(req.body);
    const auto id = required<std::string>(body, "experiment");
    const auto k = k_from_body(body);
    LossSpec loss;
    loss.tradeoffs = io::vector_from_json(body.value("tradeoffs", json()));
    loss.c0 = body.value("c0", 0.0);
    loss.c1 = body.value("c1", 0.0);
    const auto seed = body.value("seed", options_.default_seed);
    const auto samples = body.value("samples", kDefaultJointSamples);
    auto snap = registry_.snapshot();
    const auto ep = posterior_for(*snap, id, k, options_.level);
    const auto rep = decide_for(ep, loss, seed, samples);
    return ok(report::decision_json(rep, ep.record.schema, id, loss, seed));
  }

  ApiResponse post_decision_space(const ApiRequest &req) const {
    const auto body = parse_body(req.body);
    const auto id = required<std::string>(body, "experiment");
    const auto k = k_from_body(body);
    const auto a1 = required<json>(body, "axis1");
    const auto a2 = required<json>(body, "axis2");
    const auto v1 = required<std::vector<double>>(a1, "values");
    const auto v2 = required<std::vector<double>>(a2, "values");
    if (v1.size() * v2.size() > kMaxGridPoints)
      fail(413, "grid_too_large",
           "grid has " + std::to_string(v1.size() * v2.size()) + " points; limit is " +
               std::to_string(kMaxGridPoints));

    auto snap = registry_.snapshot();
    const auto ep = posterior_for(*snap, id, k, options_.level);
    const auto &schema = ep.record.schema;
    auto metric_of = [&](const json &axis) {
      const auto &m = axis.at("metric");
      return m.is_number_integer() ? resolve_metric(schema, std::to_string(m.get<long>()))
                                   : resolve_metric(schema, m.get<std::string>());
    };
    if (!a1.contains("metric") || !a2.contains("metric"))
      throw ValidationError({"axis1 and axis2 need a metric"});
    const GridAxis axis1{metric_of(a1), v1}, axis2{metric_of(a2), v2};
    Vector fixed = Vector::Zero(ep.record.x.size());
    if (body.contains("fixed"))
      fixed = io::vector_from_json(body["fixed"]);
    const double c0 = body.value("c0", 0.0), c1 = body.value("c1", 0.0);
    const auto space = decision_space(ep.summary.gaussian, axis1, axis2, fixed, c0, c1);

    json j = report::grid_json(space, schema);
    j["experiment"] = id;
    j["k"] = k.to_json();
    j["c0"] = c0;
    j["c1"] = c1;
    j["fixed"] = io::vector_to_json(fixed);
    j["posterior"] = report::posterior_json(ep.summary, schema);
    return ok(j);
  }

  Registry &registry_;
  ServiceOptions options_;
};

} // namespace bayesdecide

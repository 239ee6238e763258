#include "http_api.hpp"

#include <exception>

namespace aaa::http {

namespace {

void send(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <class Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const ServiceError& e) {
    send(res, e.status(), error_envelope(e.code(), e.what(), e.field()));
  } catch (const json::parse_error& e) {
    send(res, 400, error_envelope("malformed_json", e.what(), ""));
  } catch (const ValidationError& e) {
    send(res, 400, error_envelope(error_code::kValidation, e.what(), e.field()));
  } catch (const std::exception& e) {
    send(res, 500, error_envelope("internal_error", e.what(), ""));
  }
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  return json::parse(req.body);
}

json trial_view(TrialService& service, const std::string& id) {
  const TrialState st = service.get_state(id);
  return recommendation_to_json(make_recommendation(st), st);
}

}  // namespace

json error_envelope(const std::string& code, const std::string& message, const std::string& field) {
  return {{"schemaVersion", kSchemaVersion},
          {"code", code},
          {"message", message},
          {"field", field.empty() ? json(nullptr) : json(field)}};
}

void register_routes(httplib::Server& server, TrialService& service) {
  server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    send(res, 200, {{"schemaVersion", kSchemaVersion}, {"status", "ok"}});
  });

  server.Post("/trials", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const CreateResult r = service.create_trial(parse_body(req));
      json body = {{"schemaVersion", kSchemaVersion},
                   {"id", r.id},
                   {"created", r.created},
                   {"recommendation", trial_view(service, r.id)}};
      send(res, r.created ? 201 : 200, body);
    });
  });

  server.Post(R"(/trials/([^/]+)/outcomes)",
              [&service](const httplib::Request& req, httplib::Response& res) {
                guarded(res, [&] {
                  const std::string id = req.matches[1];
                  service.record_outcomes(id, parse_body(req));
                  send(res, 200, trial_view(service, id));
                });
              });

  server.Get(R"(/trials/([^/]+)/recommendation)",
             [&service](const httplib::Request& req, httplib::Response& res) {
               guarded(res, [&] { send(res, 200, trial_view(service, req.matches[1])); });
             });

  server.Get(R"(/trials/([^/]+))", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string id = req.matches[1];
      const TrialState st = service.get_state(id);
      json events = json::array();
      for (const TrialEvent& e : st.log) events.push_back(e);
      send(res, 200,
           {{"schemaVersion", kSchemaVersion},
            {"id", id},
            {"state", state_to_json(st)},
            {"events", events}});
    });
  });
}

}  // namespace aaa::http

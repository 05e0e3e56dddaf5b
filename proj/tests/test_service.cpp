#include "doctest.h"

#include <chrono>
#include <thread>

#include "bop2dc/service.hpp"
#include "httplib.h"

using namespace bop2dc;
using ojson = nlohmann::ordered_json;

namespace {

const char* kConfig = R"({
  "endpoint": {"family": "binary"},
  "targets": [{"lrv": 0.2, "cmv": 0.3, "eff": 0.4}],
  "plan": {"max_n": 40, "interim_looks": [10, 20, 30]},
  "evaluation": "monte_carlo",
  "grid": {"lambda_lrv": {"lo": 0.8, "hi": 0.99, "step": 0.01},
           "lambda_cmv": {"lo": 0.05, "hi": 0.3, "step": 0.05}},
  "simulation": {"n_sims": 1500, "seed": 42}
})";

struct Running {
    Service service{ServiceOptions{1, 1}};
    int port = -1;
    std::thread thread;

    Running() {
        port = service.bind("127.0.0.1", 0);
        REQUIRE(port > 0);
        thread = std::thread([this] { service.listen(); });
        service.wait_until_ready();
    }
    ~Running() {
        service.stop();
        thread.join();
    }
};

}  // namespace

TEST_CASE("health and validation") {
    Running r;
    httplib::Client cli("127.0.0.1", r.port);
    auto res = cli.Get("/v1/health");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(ojson::parse(res->body)["status"] == "ok");

    res = cli.Post("/v1/validate", kConfig, "application/json");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(ojson::parse(res->body)["valid"] == true);

    res = cli.Post("/v1/validate", R"({"endpoint": {}})", "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);
    CHECK(ojson::parse(res->body)["errors"].size() >= 1u);

    res = cli.Post("/v1/validate", "{not json", "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);
    CHECK(res->body.find("JSON parse error at line 1") != std::string::npos);
}

TEST_CASE("calibration job lifecycle") {
    Running r;
    httplib::Client cli("127.0.0.1", r.port);
    auto res = cli.Post("/v1/jobs/calibrate", kConfig, "application/json");
    REQUIRE(res);
    CHECK(res->status == 202);
    const auto id = ojson::parse(res->body)["id"].get<std::string>();
    CHECK(res->get_header_value("Location") == "/v1/jobs/" + id);

    double last = 0.0;
    std::string state;
    for (int i = 0; i < 6000; ++i) {
        res = cli.Get("/v1/jobs/" + id);
        REQUIRE(res);
        REQUIRE(res->status == 200);
        const auto j = ojson::parse(res->body);
        const double p = j["progress"].get<double>();
        CHECK(p >= last);
        last = p;
        state = j["state"].get<std::string>();
        if (state == "done" || state == "failed") break;
        CHECK((state == "queued" || state == "running"));
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    REQUIRE(state == "done");
    CHECK(last == 1.0);

    res = cli.Get("/v1/jobs/" + id + "/result");
    REQUIRE(res);
    CHECK(res->status == 200);
    // identical bytes to the in-process engine
    CHECK(res->body == dump_payload(run_calibration(load_config(kConfig), {1, {}}).payload));
}

TEST_CASE("simulation job and decision table") {
    Running r;
    httplib::Client cli("127.0.0.1", r.port);
    auto doc = ojson::parse(kConfig);
    auto res = cli.Post("/v1/jobs/simulate", doc.dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);

    doc["design"] = {{"lambda_lrv", 0.93}, {"lambda_cmv", 0.14}, {"gamma_lrv", 0.0}, {"gamma_cmv", 0.8}};
    res = cli.Post("/v1/jobs/simulate", doc.dump(), "application/json");
    REQUIRE(res);
    REQUIRE(res->status == 202);
    const auto id = ojson::parse(res->body)["id"].get<std::string>();
    const auto snap = r.service.jobs().wait(id);
    REQUIRE(snap);
    CHECK(snap->state == JobState::Done);
    res = cli.Get("/v1/jobs/" + id + "/result");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(ojson::parse(res->body)["kind"] == "simulation");

    res = cli.Post("/v1/decision-table", doc.dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(ojson::parse(res->body)["rules"].contains("decision_table"));
}

TEST_CASE("unknown jobs and routes") {
    Running r;
    httplib::Client cli("127.0.0.1", r.port);
    auto res = cli.Get("/v1/jobs/job-nope-1");
    REQUIRE(res);
    CHECK(res->status == 404);
    res = cli.Get("/v1/jobs/job-nope-1/result");
    REQUIRE(res);
    CHECK(res->status == 404);
    res = cli.Get("/v1/nothing");
    REQUIRE(res);
    CHECK(res->status == 404);
    CHECK(ojson::parse(res->body)["error"] == "not found");
}

TEST_CASE("job manager without http") {
    JobManager jobs(2, 1);
    CHECK(jobs.workers() == 2);
    const auto a = jobs.submit(JobKind::Calibrate, load_config(kConfig));
    const auto b = jobs.submit(JobKind::Calibrate, load_config(kConfig));
    CHECK(a != b);
    const auto sa = jobs.wait(a), sb = jobs.wait(b);
    REQUIRE(sa);
    REQUIRE(sb);
    CHECK(sa->result == sb->result);
    CHECK_FALSE(jobs.get("missing").has_value());
    CHECK(job_to_json(*sa)["state"] == "done");
}

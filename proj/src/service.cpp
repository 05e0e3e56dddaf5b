#include "bop2dc/service.hpp"

#include <algorithm>
#include <condition_variable>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <map>
#include <mutex>
#include <random>
#include <thread>

#include "httplib.h"

namespace bop2dc {

using ojson = nlohmann::ordered_json;

std::string to_string(JobState s) {
    switch (s) {
        case JobState::Queued: return "queued";
        case JobState::Running: return "running";
        case JobState::Done: return "done";
        case JobState::Failed: return "failed";
    }
    return "?";
}

ojson job_to_json(const JobSnapshot& job) {
    ojson j;
    j["id"] = job.id;
    j["kind"] = job.kind == JobKind::Calibrate ? "calibrate" : "simulate";
    j["state"] = to_string(job.state);
    j["progress"] = job.progress;
    j["config"] = job.config;
    if (job.result) j["result"] = ojson::parse(*job.result);
    if (job.error) j["error"] = *job.error;
    return j;
}

struct JobManager::Impl {
    struct Job {
        JobSnapshot snap;
        DesignConfig config;
    };

    mutable std::mutex mu;
    mutable std::condition_variable changed;
    std::condition_variable work;
    std::map<std::string, std::shared_ptr<Job>> jobs;
    std::deque<std::shared_ptr<Job>> queue;
    std::vector<std::thread> pool;
    bool stopping = false;
    int threads_per_job = 0;
    std::uint64_t counter = 0;
    std::string prefix;

    void worker() {
        for (;;) {
            std::shared_ptr<Job> job;
            {
                std::unique_lock lk(mu);
                work.wait(lk, [&] { return stopping || !queue.empty(); });
                if (queue.empty()) return;
                job = queue.front();
                queue.pop_front();
                job->snap.state = JobState::Running;
            }
            changed.notify_all();
            run(*job);
            changed.notify_all();
        }
    }

    void run(Job& job) {
        EngineOptions opt;
        opt.threads = threads_per_job;
        opt.progress = [&](double f) {
            std::lock_guard lk(mu);
            job.snap.progress = std::max(job.snap.progress, std::clamp(f, 0.0, 1.0));
        };
        try {
            std::string payload;
            if (job.snap.kind == JobKind::Calibrate)
                payload = dump_payload(run_calibration(job.config, opt).payload);
            else
                payload = dump_payload(run_simulation(job.config, opt).payload);
            std::lock_guard lk(mu);
            job.snap.result = std::move(payload);
            job.snap.progress = 1.0;
            job.snap.state = JobState::Done;
        } catch (const std::exception& e) {
            std::lock_guard lk(mu);
            job.snap.error = e.what();
            job.snap.state = JobState::Failed;
        }
    }
};

JobManager::JobManager(int workers, int threads_per_job) : impl_(std::make_unique<Impl>()) {
    impl_->threads_per_job = threads_per_job;
    std::random_device rd;
    char buf[16];
    std::snprintf(buf, sizeof buf, "%08x", rd());
    impl_->prefix = buf;
    const int n = resolve_threads(workers);
    for (int i = 0; i < n; ++i) impl_->pool.emplace_back([this] { impl_->worker(); });
}

JobManager::~JobManager() {
    {
        std::lock_guard lk(impl_->mu);
        impl_->stopping = true;
        impl_->queue.clear();
    }
    impl_->work.notify_all();
    for (auto& t : impl_->pool) t.join();
}

int JobManager::workers() const { return static_cast<int>(impl_->pool.size()); }

std::string JobManager::submit(JobKind kind, DesignConfig config) {
    auto job = std::make_shared<Impl::Job>();
    job->snap.kind = kind;
    job->snap.config = config.echo;
    job->config = std::move(config);
    std::string id;
    {
        std::lock_guard lk(impl_->mu);
        id = "job-" + impl_->prefix + "-" + std::to_string(++impl_->counter);
        job->snap.id = id;
        impl_->jobs.emplace(id, job);
        impl_->queue.push_back(job);
    }
    impl_->work.notify_one();
    return id;
}

std::optional<JobSnapshot> JobManager::get(const std::string& id) const {
    std::lock_guard lk(impl_->mu);
    auto it = impl_->jobs.find(id);
    if (it == impl_->jobs.end()) return std::nullopt;
    return it->second->snap;
}

std::optional<JobSnapshot> JobManager::wait(const std::string& id) const {
    std::unique_lock lk(impl_->mu);
    auto it = impl_->jobs.find(id);
    if (it == impl_->jobs.end()) return std::nullopt;
    const auto job = it->second;
    impl_->changed.wait(lk, [&] {
        return job->snap.state == JobState::Done || job->snap.state == JobState::Failed;
    });
    return job->snap;
}

namespace {

void send_json(httplib::Response& res, int status, const ojson& body) {
    res.status = status;
    res.set_content(dump_payload(body), "application/json");
}

ojson error_body(const std::string& message) {
    ojson j;
    j["error"] = message;
    return j;
}

ojson errors_body(const std::vector<FieldError>& errors) {
    ojson j;
    j["valid"] = false;
    j["errors"] = errors_to_json(errors);
    return j;
}

}  // namespace

struct Service::Impl {
    httplib::Server server;
    JobManager jobs;

    explicit Impl(const ServiceOptions& opt) : jobs(opt.workers, opt.threads_per_job) { routes(); }

    // Parses a request body as a config; writes a 400 response on failure.
    std::optional<DesignConfig> config_from(const httplib::Request& req, httplib::Response& res) {
        auto outcome = parse_config(req.body);
        if (!outcome.ok()) {
            send_json(res, 400, errors_body(outcome.errors));
            return std::nullopt;
        }
        return std::move(outcome.config);
    }

    void submit(JobKind kind, const httplib::Request& req, httplib::Response& res) {
        auto c = config_from(req, res);
        if (!c) return;
        if (kind == JobKind::Simulate && !c->design) {
            send_json(res, 400, errors_body({{"design", "required for simulation"}}));
            return;
        }
        const auto id = jobs.submit(kind, std::move(*c));
        ojson body;
        body["id"] = id;
        body["state"] = "queued";
        res.set_header("Location", "/v1/jobs/" + id);
        send_json(res, 202, body);
    }

    void routes() {
        server.Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
            ojson j;
            j["status"] = "ok";
            j["version"] = kVersion;
            j["name"] = "bop2dc";
            send_json(res, 200, j);
        });
        server.Post("/v1/validate", [](const httplib::Request& req, httplib::Response& res) {
            const auto outcome = parse_config(req.body);
            send_json(res, outcome.ok() ? 200 : 400, validation_payload(outcome));
        });
        server.Post("/v1/jobs/calibrate", [this](const httplib::Request& req, httplib::Response& res) {
            submit(JobKind::Calibrate, req, res);
        });
        server.Post("/v1/jobs/simulate", [this](const httplib::Request& req, httplib::Response& res) {
            submit(JobKind::Simulate, req, res);
        });
        server.Get(R"(/v1/jobs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            const auto job = jobs.get(req.matches[1]);
            if (!job) return send_json(res, 404, error_body("unknown job"));
            send_json(res, 200, job_to_json(*job));
        });
        server.Get(R"(/v1/jobs/([^/]+)/result)", [this](const httplib::Request& req, httplib::Response& res) {
            const auto job = jobs.get(req.matches[1]);
            if (!job) return send_json(res, 404, error_body("unknown job"));
            if (!job->result) {
                ojson j;
                j["id"] = job->id;
                j["state"] = to_string(job->state);
                j["progress"] = job->progress;
                j["error"] = job->error ? *job->error : "result not available yet";
                return send_json(res, 404, j);
            }
            res.status = 200;
            res.set_content(*job->result, "application/json");
        });
        server.Post("/v1/decision-table", [this](const httplib::Request& req, httplib::Response& res) {
            auto c = config_from(req, res);
            if (!c) return;
            if (!c->design) return send_json(res, 400, errors_body({{"design", "required for a decision table"}}));
            try {
                send_json(res, 200, run_decision_table(*c));
            } catch (const std::exception& e) {
                send_json(res, 400, errors_body({{"", e.what()}}));
            }
        });
        server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
            std::string msg = "internal error";
            try {
                std::rethrow_exception(ep);
            } catch (const std::exception& e) {
                msg = e.what();
            } catch (...) {
            }
            send_json(res, 500, error_body(msg));
        });
        server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
            if (res.body.empty()) send_json(res, res.status, error_body(res.status == 404 ? "not found" : "error"));
        });
    }
};

Service::Service(ServiceOptions opt) : impl_(std::make_unique<Impl>(opt)) {}
Service::~Service() { stop(); }

int Service::bind(const std::string& host, int port) {
    if (port == 0) return impl_->server.bind_to_any_port(host);
    return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool Service::listen() { return impl_->server.listen_after_bind(); }
void Service::stop() { impl_->server.stop(); }
void Service::wait_until_ready() const { impl_->server.wait_until_ready(); }
JobManager& Service::jobs() { return impl_->jobs; }

int default_port(int fallback) {
    if (const char* env = std::getenv("BOP2DC_PORT")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0 && v < 65536) return static_cast<int>(v);
    }
    return fallback;
}

}  // namespace bop2dc

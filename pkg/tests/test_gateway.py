"""REST gateway: auth lifecycle, vehicles, profile, tickets, events, isolation."""
import random
import threading

import pytest
from fastapi.testclient import TestClient

from smartpark.ledger.entries import DomainEvent
from smartpark.consensus.livenet import LocalNetwork
from smartpark.gateway.app import create_app
from smartpark.gateway.config import GatewayConfig
from smartpark.gateway.providers import NONCE_DECLINE, NONCE_FRAUD, NONCE_VALID
from smartpark.gateway.wiring import build_service

PASSWORD = "sup3r-secret-pw"


class Harness:
    def __init__(self, now_ms=None):
        self.service = build_service(
            GatewayConfig(hash_rounds=4), network=LocalNetwork(), now_ms=now_ms
        )
        self.app = create_app(self.service)
        self.client = TestClient(self.app, raise_server_exceptions=False)

    def code_from_email(self, email):
        message = self.service.email.last_to(email)
        return message.body.split("code is ")[1].split(".")[0]

    def signup(self, email, push_token=None):
        response = self.client.post(
            "/auth/register", json={"email": email, "password": PASSWORD}
        )
        assert response.status_code == 201, response.text
        response = self.client.post(
            "/auth/activate", json={"email": email, "code": self.code_from_email(email)}
        )
        assert response.status_code == 200
        body = {"email": email, "password": PASSWORD}
        if push_token:
            body["device_push_token"] = push_token
        response = self.client.post("/auth/login", json=body)
        assert response.status_code == 200
        return response.json()

    def auth(self, payload):
        return {"Authorization": f"Bearer {payload['token']}"}

    def add_vehicle(self, headers, plate="P-1"):
        response = self.client.post(
            "/vehicles", json={"model": "M", "make": "K", "plate": plate}, headers=headers
        )
        assert response.status_code == 201, response.text
        return response.json()


@pytest.fixture
def harness():
    return Harness()


# -- registration / activation -------------------------------------------------


def test_register_sends_exactly_one_activation_email(harness):
    harness.client.post("/auth/register", json={"email": "a@x.io", "password": PASSWORD})
    emails = [m for m in harness.service.email.sent if m.to == "a@x.io"]
    assert len(emails) == 1
    assert "code is" in emails[0].body


def test_duplicate_email_conflicts(harness):
    body = {"email": "dup@x.io", "password": PASSWORD}
    assert harness.client.post("/auth/register", json=body).status_code == 201
    assert harness.client.post("/auth/register", json=body).status_code == 409


def test_weak_passwords_rejected(harness):
    for weak in ["short1", "nodigitshere", "12345678"]:
        response = harness.client.post(
            "/auth/register", json={"email": "w@x.io", "password": weak}
        )
        assert response.status_code == 400


def test_bad_email_rejected(harness):
    response = harness.client.post(
        "/auth/register", json={"email": "not-an-email", "password": PASSWORD}
    )
    assert response.status_code == 400


def test_login_requires_activation(harness):
    harness.client.post("/auth/register", json={"email": "p@x.io", "password": PASSWORD})
    response = harness.client.post(
        "/auth/login", json={"email": "p@x.io", "password": PASSWORD}
    )
    assert response.status_code == 401


def test_wrong_activation_code(harness):
    harness.client.post("/auth/register", json={"email": "c@x.io", "password": PASSWORD})
    response = harness.client.post("/auth/activate", json={"email": "c@x.io", "code": "000000"})
    assert response.status_code == 401


def test_expired_activation_code():
    clock = {"now": 1_700_000_000_000}
    harness = Harness(now_ms=lambda: clock["now"])
    harness.client.post("/auth/register", json={"email": "e@x.io", "password": PASSWORD})
    code = harness.code_from_email("e@x.io")
    clock["now"] += 16 * 60 * 1000  # past the 15-minute window
    response = harness.client.post("/auth/activate", json={"email": "e@x.io", "code": code})
    assert response.status_code == 409
    # reissue and activate with the fresh code
    assert harness.client.post("/auth/reissue", json={"email": "e@x.io"}).status_code == 200
    fresh = harness.code_from_email("e@x.io")
    assert harness.client.post(
        "/auth/activate", json={"email": "e@x.io", "code": fresh}
    ).status_code == 200


def test_login_error_is_indistinguishable(harness):
    harness.signup("real@x.io")
    wrong_pw = harness.client.post(
        "/auth/login", json={"email": "real@x.io", "password": "bad-pass-1"}
    )
    no_user = harness.client.post(
        "/auth/login", json={"email": "ghost@x.io", "password": "bad-pass-1"}
    )
    assert wrong_pw.status_code == no_user.status_code == 401
    assert wrong_pw.json() == no_user.json()


def test_forgot_and_reset_password(harness):
    harness.signup("f@x.io")
    assert harness.client.post("/auth/forgot", json={"email": "f@x.io"}).status_code == 200
    code = harness.code_from_email("f@x.io")
    response = harness.client.post(
        "/auth/reset",
        json={"email": "f@x.io", "code": code, "new_password": "brand-new-pw9"},
    )
    assert response.status_code == 200
    assert harness.client.post(
        "/auth/login", json={"email": "f@x.io", "password": "brand-new-pw9"}
    ).status_code == 200
    # the code is single-use
    response = harness.client.post(
        "/auth/reset",
        json={"email": "f@x.io", "code": code, "new_password": "another-pw10"},
    )
    assert response.status_code == 401


# -- login payload ---------------------------------------------------------------


def test_login_bootstrap_matches_store(harness):
    payload = harness.signup("boot@x.io", push_token="pt-9")
    headers = harness.auth(payload)
    v1 = harness.add_vehicle(headers, plate="A-1")
    v2 = harness.add_vehicle(headers, plate="A-2")
    harness.client.post(
        "/device/checkin", json={"device_code": v1["device_code"], "region": "DB"}
    )
    harness.client.post(
        "/device/checkout", json={"device_code": v1["device_code"], "region": "DB"}
    )
    harness.client.post(
        "/device/checkin", json={"device_code": v1["device_code"], "region": "DB"}
    )
    again = harness.client.post(
        "/auth/login", json={"email": "boot@x.io", "password": PASSWORD}
    ).json()
    assert {v["vehicle_id"] for v in again["vehicles"]} == {v1["vehicle_id"], v2["vehicle_id"]}
    assert len(again["logs"]) == 3  # the three current-month entries
    assert again["account"]["push_registered"] is True
    statuses = sorted(t["status"] for t in again["tickets"])
    assert statuses == ["Open", "Unpaid"]


# -- vehicles ---------------------------------------------------------------------


def test_first_vehicle_auto_activates_and_codes_are_unique(harness):
    payload = harness.signup("v@x.io")
    headers = harness.auth(payload)
    first = harness.add_vehicle(headers, plate="P-1")
    assert first["active"] is True
    codes = {first["device_code"]}
    for i in range(2, 12):
        vehicle = harness.add_vehicle(headers, plate=f"P-{i}")
        assert vehicle["active"] is False
        codes.add(vehicle["device_code"])
    assert len(codes) == 11


def test_activating_second_vehicle_deactivates_first(harness):
    payload = harness.signup("act@x.io")
    headers = harness.auth(payload)
    first = harness.add_vehicle(headers, plate="P-1")
    second = harness.add_vehicle(headers, plate="P-2")
    response = harness.client.patch(
        f"/vehicles/{second['vehicle_id']}", json={"activate": True}, headers=headers
    )
    assert response.status_code == 200 and response.json()["active"] is True
    listing = harness.client.get("/vehicles", headers=headers).json()["vehicles"]
    active = [v for v in listing if v["active"]]
    assert [v["vehicle_id"] for v in active] == [second["vehicle_id"]]


def test_duplicate_plate_per_account_conflicts(harness):
    headers = harness.auth(harness.signup("pl@x.io"))
    harness.add_vehicle(headers, plate="SAME")
    response = harness.client.post(
        "/vehicles", json={"model": "M", "make": "K", "plate": "SAME"}, headers=headers
    )
    assert response.status_code == 409


def test_empty_vehicle_fields_rejected(harness):
    headers = harness.auth(harness.signup("ev@x.io"))
    response = harness.client.post(
        "/vehicles", json={"model": " ", "make": "K", "plate": "P"}, headers=headers
    )
    assert response.status_code == 400


def test_delete_vehicle_with_open_ticket_rejected(harness):
    payload = harness.signup("del@x.io")
    headers = harness.auth(payload)
    vehicle = harness.add_vehicle(headers)
    harness.client.post(
        "/device/checkin", json={"device_code": vehicle["device_code"], "region": "DB"}
    )
    response = harness.client.delete(f"/vehicles/{vehicle['vehicle_id']}", headers=headers)
    assert response.status_code == 409
    harness.client.post(
        "/device/checkout", json={"device_code": vehicle["device_code"], "region": "DB"}
    )
    response = harness.client.delete(f"/vehicles/{vehicle['vehicle_id']}", headers=headers)
    assert response.status_code == 200


# -- profile -----------------------------------------------------------------------


def test_license_stored_and_reported(harness):
    payload = harness.signup("lic@x.io")
    headers = harness.auth(payload)
    response = harness.client.put(
        "/profile/license", json={"name": "A. Driver", "license_number": "L-77"},
        headers=headers,
    )
    assert response.status_code == 200
    profile = harness.client.get("/profile", headers=headers).json()
    assert profile["account"]["license"] == {"name": "A. Driver", "license_number": "L-77"}


def test_card_lifecycle_valid_fraud_replace(harness):
    payload = harness.signup("card@x.io")
    headers = harness.auth(payload)
    fraud = harness.client.put(
        "/profile/card", json={"payment_nonce": NONCE_FRAUD}, headers=headers
    )
    assert fraud.status_code == 402
    assert "fraud" in fraud.json()["error"]
    account = harness.service.store.account_by_email("card@x.io")
    assert account.card_token is None

    ok = harness.client.put(
        "/profile/card", json={"payment_nonce": NONCE_VALID}, headers=headers
    )
    assert ok.status_code == 200 and ok.json()["message"] == "Credit Card Added"
    first_token = harness.service.store.account_by_email("card@x.io").card_token
    assert first_token

    harness.client.put("/profile/card", json={"payment_nonce": NONCE_VALID}, headers=headers)
    second_token = harness.service.store.account_by_email("card@x.io").card_token
    assert second_token != first_token  # single card per account, replaced


# -- auth enforcement and isolation ----------------------------------------------------


AUTH_REQUIRED = [
    ("get", "/vehicles"),
    ("post", "/vehicles"),
    ("get", "/profile"),
    ("put", "/profile/license"),
    ("put", "/profile/card"),
    ("post", "/tickets/pay"),
]


@pytest.mark.parametrize("method,path", AUTH_REQUIRED)
def test_endpoints_reject_missing_token(harness, method, path):
    kwargs = {} if method == "get" else {"json": {}}
    response = getattr(harness.client, method)(path, **kwargs)
    assert response.status_code == 401


def test_access_token_query_parameter_fallback(harness):
    payload = harness.signup("qp@x.io")
    response = harness.client.get("/vehicles", params={"access_token": payload["token"]})
    assert response.status_code == 200


def test_cross_account_access_forbidden(harness):
    alice = harness.signup("alice@x.io")
    bob = harness.signup("bob@x.io")
    vehicle = harness.add_vehicle(harness.auth(alice))
    bob_headers = harness.auth(bob)
    vid = vehicle["vehicle_id"]
    assert harness.client.get(f"/vehicles/{vid}/logs", headers=bob_headers).status_code == 403
    assert harness.client.get(f"/vehicles/{vid}/tickets", headers=bob_headers).status_code == 403
    assert harness.client.patch(
        f"/vehicles/{vid}", json={"activate": True}, headers=bob_headers
    ).status_code == 403
    assert harness.client.delete(f"/vehicles/{vid}", headers=bob_headers).status_code == 403


def test_fuzzed_tokens_rejected_on_api(harness):
    rng = random.Random(4242)
    for _ in range(50):
        junk = "".join(chr(rng.randrange(33, 127)) for _ in range(rng.randrange(1, 80)))
        response = harness.client.get(
            "/vehicles", headers={"Authorization": f"Bearer {junk}"}
        )
        assert response.status_code == 401


# -- tickets and payment -----------------------------------------------------------------


def seeded_ticket_ids(harness, headers, vehicle, stays=3):
    for _ in range(stays):
        harness.client.post(
            "/device/checkin", json={"device_code": vehicle["device_code"], "region": "DB"}
        )
        harness.client.post(
            "/device/checkout", json={"device_code": vehicle["device_code"], "region": "DB"}
        )
    tickets = harness.client.get(
        f"/vehicles/{vehicle['vehicle_id']}/tickets", headers=headers
    ).json()["tickets"]
    return [t["ticket_id"] for t in tickets if t["status"] == "Unpaid"]


def test_pay_all_then_statuses_flip_to_paid(harness):
    payload = harness.signup("pay@x.io")
    headers = harness.auth(payload)
    vehicle = harness.add_vehicle(headers)
    harness.client.put("/profile/card", json={"payment_nonce": NONCE_VALID}, headers=headers)
    ids = seeded_ticket_ids(harness, headers, vehicle, stays=3)
    assert len(ids) == 3
    response = harness.client.post("/tickets/pay", json={"ticket_ids": ids}, headers=headers)
    results = response.json()["results"]
    assert all(r["ok"] for r in results)
    assert len({r["payment_ref"] for r in results}) == 3
    after = harness.client.get(
        f"/vehicles/{vehicle['vehicle_id']}/tickets", headers=headers
    ).json()["tickets"]
    assert all(t["status"] == "Paid" and t["payment_ref"] for t in after)


def test_pay_without_card_is_precondition_error(harness):
    payload = harness.signup("nocard@x.io")
    headers = harness.auth(payload)
    vehicle = harness.add_vehicle(headers)
    ids = seeded_ticket_ids(harness, headers, vehicle, stays=1)
    response = harness.client.post("/tickets/pay", json={"ticket_ids": ids}, headers=headers)
    assert response.status_code == 400


def test_declined_card_keeps_ticket_unpaid(harness):
    payload = harness.signup("decl@x.io")
    headers = harness.auth(payload)
    vehicle = harness.add_vehicle(headers)
    harness.client.put("/profile/card", json={"payment_nonce": NONCE_DECLINE}, headers=headers)
    ids = seeded_ticket_ids(harness, headers, vehicle, stays=1)
    results = harness.client.post(
        "/tickets/pay", json={"ticket_ids": ids}, headers=headers
    ).json()["results"]
    assert results[0]["ok"] is False
    assert "declined" in results[0]["reason"]
    after = harness.client.get(
        f"/vehicles/{vehicle['vehicle_id']}/tickets", headers=headers
    ).json()["tickets"]
    assert after[0]["status"] == "Unpaid"


def test_double_pay_single_charge(harness):
    payload = harness.signup("dbl@x.io")
    headers = harness.auth(payload)
    vehicle = harness.add_vehicle(headers)
    harness.client.put("/profile/card", json={"payment_nonce": NONCE_VALID}, headers=headers)
    ids = seeded_ticket_ids(harness, headers, vehicle, stays=1)
    first = harness.client.post("/tickets/pay", json={"ticket_ids": ids}, headers=headers)
    second = harness.client.post("/tickets/pay", json={"ticket_ids": ids}, headers=headers)
    assert first.json()["results"][0]["ok"] is True
    assert second.json()["results"][0]["ok"] is False
    assert len(harness.service.payments.approved_charges(ids[0])) == 1


def test_paying_anothers_ticket_is_refused(harness):
    alice = harness.signup("a2@x.io")
    bob = harness.signup("b2@x.io")
    alice_headers = harness.auth(alice)
    vehicle = harness.add_vehicle(alice_headers)
    ids = seeded_ticket_ids(harness, alice_headers, vehicle, stays=1)
    bob_headers = harness.auth(bob)
    harness.client.put(
        "/profile/card", json={"payment_nonce": NONCE_VALID}, headers=bob_headers
    )
    results = harness.client.post(
        "/tickets/pay", json={"ticket_ids": ids}, headers=bob_headers
    ).json()["results"]
    assert results[0]["ok"] is False
    assert harness.service.payments.approved_charges(ids[0]) == []


def test_preview_endpoint(harness):
    payload = harness.signup("prev@x.io")
    headers = harness.auth(payload)
    vehicle = harness.add_vehicle(headers)
    response = harness.client.get(
        f"/vehicles/{vehicle['vehicle_id']}/preview", headers=headers
    )
    assert response.status_code == 404  # nothing open yet
    harness.client.post(
        "/device/checkin", json={"device_code": vehicle["device_code"], "region": "DB"}
    )
    response = harness.client.get(
        f"/vehicles/{vehicle['vehicle_id']}/preview", headers=headers
    )
    assert response.status_code == 200
    assert response.json()["projected_cost_minor_units"] >= 3  # at least the 1-min minimum


# -- device endpoints ----------------------------------------------------------------------


def test_device_endpoints_validate_codes(harness):
    payload = harness.signup("dev@x.io")
    headers = harness.auth(payload)
    vehicle = harness.add_vehicle(headers)
    second = harness.add_vehicle(headers, plate="P-XY")  # inactive
    ok = harness.client.post(
        "/device/checkin", json={"device_code": vehicle["device_code"], "region": "DB"}
    )
    assert ok.status_code == 200
    assert ok.json()["entry"]["action"] == "CheckIn"
    inactive = harness.client.post(
        "/device/checkin", json={"device_code": second["device_code"], "region": "DB"}
    )
    assert inactive.status_code == 404
    unknown = harness.client.post(
        "/device/checkin", json={"device_code": "PV-NOPE", "region": "DB"}
    )
    assert unknown.status_code == 404
    bad_region = harness.client.post(
        "/device/checkout", json={"device_code": vehicle["device_code"], "region": "ZZ"}
    )
    assert bad_region.status_code == 400


# -- events -> notifications ------------------------------------------------------------------


def test_push_sent_once_per_entry_even_on_duplicate_events(harness):
    payload = harness.signup("ev1@x.io", push_token="pt-1")
    headers = harness.auth(payload)
    vehicle = harness.add_vehicle(headers)
    harness.client.post(
        "/device/checkin", json={"device_code": vehicle["device_code"], "region": "DB"}
    )
    pushes = harness.service.push.pushed
    assert len(pushes) == 1
    entry_id = pushes[0].data["entry_id"]
    # replay the same event (at-least-once stream)
    harness.service.on_ledger_event(
        DomainEvent(uid=vehicle["device_code"], time=0, type="CheckIn", entry_id=entry_id)
    )
    assert harness.service.push.count_for_entry(entry_id) == 1


def test_event_without_push_token_is_consumed_silently(harness):
    payload = harness.signup("ev2@x.io")  # no push token registered
    headers = harness.auth(payload)
    vehicle = harness.add_vehicle(headers)
    response = harness.client.post(
        "/device/checkin", json={"device_code": vehicle["device_code"], "region": "DB"}
    )
    assert response.status_code == 200
    assert harness.service.push.pushed == []


# -- misc -----------------------------------------------------------------------------------


def test_vehicle_with_no_entries_has_empty_views(harness):
    payload = harness.signup("empty@x.io")
    headers = harness.auth(payload)
    vehicle = harness.add_vehicle(headers)
    logs = harness.client.get(f"/vehicles/{vehicle['vehicle_id']}/logs", headers=headers)
    assert logs.status_code == 200
    assert logs.json()["entries"] == [] and logs.json()["anomalies"] == []
    tickets = harness.client.get(
        f"/vehicles/{vehicle['vehicle_id']}/tickets", headers=headers
    )
    assert tickets.json()["tickets"] == []


def test_gateway_submitter_flags_unknown_code_as_configuration_error(harness):
    from smartpark.errors import ConfigurationError
    from smartpark.ledger.entries import Region
    from smartpark.presence.submitters import GatewaySubmitter

    submitter = GatewaySubmitter(base_url="", client=harness.client)
    with pytest.raises(ConfigurationError):
        submitter.submit("check_in", "PV-UNREGISTERED", Region.DB, 0)


def test_config_env_overrides(tmp_path, monkeypatch):
    import yaml

    from smartpark.gateway.config import load_gateway_config

    path = tmp_path / "gw.yaml"
    path.write_text(yaml.safe_dump({"bind": "127.0.0.1:3000", "secret": "from-file"}))
    monkeypatch.setenv("PARKGW_SECRET", "from-env")
    monkeypatch.setenv("PARKGW_PORT", "4321")
    config = load_gateway_config(str(path))
    assert config.secret == "from-env"
    assert config.port == 4321


def test_ledger_status_endpoint(harness):
    response = harness.client.get("/ledger/status")
    doc = response.json()
    assert response.status_code == 200
    assert doc["chain_valid"] is True
    assert doc["quorum"] == 2


def test_openapi_listing(harness):
    doc = harness.client.get("/openapi").json()
    paths = set(doc["paths"])
    for expected in ["/auth/register", "/auth/login", "/vehicles", "/tickets/pay",
                     "/device/checkin", "/ledger/status"]:
        assert expected in paths


def test_concurrent_pay_all_never_double_charges(harness):
    payload = harness.signup("conc@x.io")
    headers = harness.auth(payload)
    vehicle = harness.add_vehicle(headers)
    harness.client.put("/profile/card", json={"payment_nonce": NONCE_VALID}, headers=headers)
    ids = seeded_ticket_ids(harness, headers, vehicle, stays=4)

    def pay_all():
        harness.client.post("/tickets/pay", json={"ticket_ids": ids}, headers=headers)

    threads = [threading.Thread(target=pay_all) for _ in range(10)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    for ticket_id in ids:
        assert len(harness.service.payments.approved_charges(ticket_id)) == 1

import pytest


@pytest.mark.asyncio
class TestAPIPositive:
    @pytest.fixture(autouse=True)
    def setup(self, client):
        self.client = client

    async def test_echo(self):
        """Test the root echo endpoint."""
        response = self.client.get("/")

        assert response.status_code == 200
        assert "message" in response.json()

    async def test_delta_profile(self):
        """Test a delta-profile of a rational point."""
        response = self.client.post("/flow/delta-profile", json={"x": ["3/7"], "k_max": 6})

        assert response.status_code == 200
        data = response.json()
        assert len(data["values"]) == 7
        assert data["values"][0]["delta"] == "1"
        assert data["horizon"]["k_max"] == 6

    async def test_singular_test(self):
        """Test that sqrt(2) is refuted on the configured schedule."""
        response = self.client.post("/dioph/singular-test", json={"matrix": [["sqrt(2)"]], "c": "1/10"})

        assert response.status_code == 200
        data = response.json()
        assert data["status"] == "REFUTED"
        assert data["refuting_Q"] == 256
        assert [record["Q"] for record in data["records"]] == [16, 64, 256, 1024]

    async def test_singular_test_with_schedule(self):
        """Test a request-level schedule override."""
        payload = {"matrix": [["3/7"]], "c": "1/100", "schedule": [8, 16]}
        response = self.client.post("/dioph/singular-test", json=payload)

        assert response.status_code == 200
        assert response.json()["status"] == "WITNESSED"
        assert response.json()["records"][0]["best"]["err"] == "0"

    async def test_omega_hat(self):
        """Test the uniform exponent estimate of sqrt(2)."""
        response = self.client.post("/dioph/omega-hat", json={"matrix": [["sqrt(2)"]]})

        assert response.status_code == 200
        data = response.json()
        assert data["onset"] == 2
        assert len(data["estimates"]) == 4

    async def test_check2star(self):
        """Test the condition on a line through a badly approximable intercept."""
        response = self.client.post("/subspace/check2star", json={"A": [["sqrt(2)"], ["1/3"]], "c": "1/10"})

        assert response.status_code == 200
        data = response.json()
        assert data["status"] == "SATISFIED"
        assert data["satisfying_Q"] is not None

    async def test_check2star_violated_lists_certificates(self):
        """Test that a rational line reports its certificates."""
        response = self.client.post("/subspace/check2star", json={"A": [["1/2"], ["1/3"]], "c": "1/10"})

        assert response.status_code == 200
        data = response.json()
        assert data["status"] == "VIOLATED"
        assert data["certificates"]
        assert data["certificates"][0]["Q"] in data["horizon"]["schedule"]

    async def test_main3(self):
        """Test the reduction chain on a rational line."""
        response = self.client.post("/subspace/main3", json={"A": [["1/2"], ["1/3"]], "c": "1/10"})

        assert response.status_code == 200
        data = response.json()
        assert data["shape"] == "ROWS"
        assert data["consistent"] is True

    async def test_survey(self):
        """Test a small survey on a rational line."""
        payload = {"A": [["1/2"], ["1/3"]], "sample_count": 3, "seed": 5}
        response = self.client.post("/experiment/survey", json=payload)

        assert response.status_code == 200
        data = response.json()
        assert data["fractions"]["WITNESSED"] == "1"
        assert len(data["samples"]) == 3
        assert data["spec"]["seed"] == 5

    async def test_curve_survey(self):
        """Test a survey along a polynomial curve."""
        payload = {
            "A": [["1/2"], ["1/3"]],
            "sample_count": 2,
            "sampler": {"kind": "curve", "param_polys": [["0", "1"]]},
        }
        response = self.client.post("/experiment/survey", json=payload)

        assert response.status_code == 200
        assert response.json()["spec"]["sampler"]["kind"] == "curve"


@pytest.mark.asyncio
class TestAPINegative:
    @pytest.fixture(autouse=True)
    def setup(self, client):
        self.client = client

    async def test_malformed_scalar(self):
        """Test that a malformed scalar is rejected."""
        response = self.client.post("/flow/delta-profile", json={"x": ["sqrt("]})

        assert response.status_code == 422
        assert response.json()["detail"]["code"] == "INPUT_ERROR"

    async def test_missing_constant(self):
        """Test request validation of the singular test."""
        response = self.client.post("/dioph/singular-test", json={"matrix": [["1/2"]]})
        assert response.status_code == 422

    async def test_ragged_matrix(self):
        """Test that a ragged matrix is rejected."""
        response = self.client.post("/dioph/singular-test", json={"matrix": [["1", "2"], ["3"]], "c": "1"})

        assert response.status_code == 422
        assert response.json()["detail"] == "Matrix must be a non-empty rectangular list of rows."

    async def test_rational_degenerate(self):
        """Test that an exact solution makes the exponent estimate degenerate."""
        response = self.client.post("/dioph/omega-hat", json={"matrix": [["1/3"]]})

        assert response.status_code == 400
        assert response.json()["detail"]["code"] == "RATIONAL_DEGENERATE"

    async def test_box_overflow(self):
        """Test that an oversized cell is reported instead of truncated."""
        payload = {"A": [["1/2", "1/3"], ["1/5", "1/7"]], "c": "1/10", "schedule": [100000], "j_range": [1]}
        response = self.client.post("/subspace/check2star", json=payload)

        assert response.status_code == 413
        assert response.json()["detail"]["code"] == "BOX_OVERFLOW"

    async def test_irrational_constant(self):
        """Test that the constant c must be rational."""
        response = self.client.post("/subspace/check2star", json={"A": [["1/2"], ["1/3"]], "c": "sqrt(2)"})

        assert response.status_code == 422
        assert response.json()["detail"] == "c must be a rational number."

    async def test_main3_not_applicable(self):
        """Test the shape precondition of the reduction chain."""
        response = self.client.post("/subspace/main3", json={"A": [["1", "sqrt(2)"], ["sqrt(3)", "1"]]})

        assert response.status_code == 400
        assert response.json()["detail"]["code"] == "NOT_APPLICABLE"

    async def test_survey_sample_count(self):
        """Test the sample count bounds."""
        response = self.client.post("/experiment/survey", json={"A": [["1/2"], ["1/3"]], "sample_count": 0})
        assert response.status_code == 422

    async def test_survey_bad_bounds(self):
        """Test that sampler bounds must be rational."""
        payload = {"A": [["1/2"], ["1/3"]], "sample_count": 1, "sampler": {"low": "abc"}}
        response = self.client.post("/experiment/survey", json=payload)

        assert response.status_code == 422
        assert response.json()["detail"] == "'abc' is not a rational number."

    async def test_curve_with_wrong_parameters(self):
        """Test that a curve needs one polynomial per parameter."""
        payload = {
            "A": [["1/2"], ["1/3"]],
            "sample_count": 1,
            "sampler": {"kind": "curve", "param_polys": [["0", "1"], ["1"]]},
        }
        response = self.client.post("/experiment/survey", json=payload)

        assert response.status_code == 422
        assert response.json()["detail"]["code"] == "INPUT_ERROR"

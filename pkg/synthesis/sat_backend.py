"""SAT backends: the in-process pysat solver or an external DIMACS solver."""

import os
import subprocess
import tempfile
import threading
from typing import Iterable, List, Optional, Tuple

from pysat.formula import CNF
from pysat.solvers import Solver, SolverNames

from config import SAT_BACKEND, SAT_EXTERNAL_TIMEOUT, SAT_SOLVER_NAME
from utils.errors import BackendTimeout, BackendUnavailable
from utils.logger import setup_logger

logger = setup_logger("synthesis.sat")


def parse_solver_output(output: str) -> Tuple[str, Optional[List[int]]]:
    """Status and model from competition-format solver output ("s" and "v" lines)."""
    status = "UNKNOWN"
    model: Optional[List[int]] = None
    for line in output.splitlines():
        if line.startswith("s SATISFIABLE"):
            status = "SATISFIABLE"
        elif line.startswith("s UNSATISFIABLE"):
            return "UNSATISFIABLE", None
        elif line.startswith("v "):
            if model is None:
                model = []
            model.extend(int(tok) for tok in line.split()[1:] if tok != "0")
    return status, model


def write_dimacs(cnf: CNF, path: str, comments: Iterable[str] = ()) -> None:
    cnf.comments = [f"c {c}" for c in comments]
    cnf.to_file(path)


class SatSession:
    """One CNF loaded into a solver, solved in resumable slices."""

    def solve(self, conflict_budget: Optional[int] = None) -> Optional[bool]:
        """True/False when decided, None when the budget ran out or it was interrupted."""
        raise NotImplementedError

    def model(self) -> List[int]:
        raise NotImplementedError

    def interrupt(self) -> None:
        pass

    def close(self) -> None:
        pass


class BuiltinSession(SatSession):
    def __init__(self, cnf: CNF, name: str):
        try:
            self.solver = Solver(name=name, bootstrap_with=cnf.clauses)
        except (NotImplementedError, ValueError) as e:
            raise BackendUnavailable(f"pysat solver '{name}' is not available: {str(e)}") from e
        self._model: Optional[List[int]] = None
        self._interrupted = False

    def solve(self, conflict_budget: Optional[int] = None) -> Optional[bool]:
        if self._interrupted:
            return None
        if conflict_budget is not None:
            self.solver.conf_budget(conflict_budget)
        else:
            self.solver.conf_budget(-1)
        result = self.solver.solve_limited(expect_interrupt=True)
        if result:
            self._model = self.solver.get_model()
        return result

    def model(self) -> List[int]:
        return list(self._model or [])

    def interrupt(self) -> None:
        self._interrupted = True
        self.solver.interrupt()

    def close(self) -> None:
        self.solver.delete()


class ExternalSession(SatSession):
    """Runs a solver binary on a DIMACS file; budgets are ignored."""

    def __init__(self, cnf: CNF, path: str, timeout: float):
        self.cnf = cnf
        self.path = path
        self.timeout = timeout
        self._model: Optional[List[int]] = None
        self._process: Optional[subprocess.Popen] = None
        self._lock = threading.Lock()
        self._interrupted = False

    def solve(self, conflict_budget: Optional[int] = None) -> Optional[bool]:
        fd, cnf_path = tempfile.mkstemp(suffix=".cnf")
        os.close(fd)
        try:
            write_dimacs(self.cnf, cnf_path)
            with self._lock:
                if self._interrupted:
                    return None
                try:
                    self._process = subprocess.Popen(
                        [self.path, cnf_path], stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True
                    )
                except (FileNotFoundError, PermissionError) as e:
                    raise BackendUnavailable(f"SAT solver not executable at '{self.path}': {str(e)}") from e
            try:
                stdout, _ = self._process.communicate(timeout=self.timeout)
            except subprocess.TimeoutExpired:
                self._process.kill()
                self._process.communicate()
                raise BackendTimeout(f"External SAT solver exceeded {self.timeout}s")
            if self._interrupted:
                return None
            # solvers exit 10 on SAT and 20 on UNSAT, so the return code is not an error signal
            status, model = parse_solver_output(stdout)
            if status == "SATISFIABLE":
                self._model = model or []
                return True
            if status == "UNSATISFIABLE":
                return False
            logger.warning(f"External SAT solver gave no verdict (exit {self._process.returncode})")
            return None
        finally:
            os.unlink(cnf_path)

    def model(self) -> List[int]:
        return list(self._model or [])

    def interrupt(self) -> None:
        with self._lock:
            self._interrupted = True
            if self._process and self._process.poll() is None:
                self._process.kill()


class SatBackend:
    """Factory for sessions; `backend` is "builtin" or a path to a solver binary."""

    def __init__(self, backend: str = SAT_BACKEND, solver_name: str = SAT_SOLVER_NAME,
                 timeout: float = SAT_EXTERNAL_TIMEOUT):
        self.backend = backend
        self.solver_name = solver_name
        self.timeout = timeout
        if backend == "builtin":
            known = {n for names in vars(SolverNames).values() if isinstance(names, (list, tuple)) for n in names}
            if known and solver_name not in known:
                raise BackendUnavailable(f"Unknown pysat solver '{solver_name}'")
        elif not os.path.exists(backend):
            raise BackendUnavailable(f"SAT solver not found at '{backend}'")

    @property
    def is_builtin(self) -> bool:
        return self.backend == "builtin"

    def open(self, cnf: CNF) -> SatSession:
        if self.is_builtin:
            return BuiltinSession(cnf, self.solver_name)
        return ExternalSession(cnf, self.backend, self.timeout)

    def solve(self, cnf: CNF) -> Optional[List[int]]:
        """Model of a satisfiable CNF, or None when unsatisfiable."""
        session = self.open(cnf)
        try:
            result = session.solve()
            if result is None:
                raise BackendTimeout("SAT backend returned no verdict")
            return session.model() if result else None
        finally:
            session.close()

# lockmgr.py
import os, socket, getpass, json, time, threading, logging
import portalocker

log = logging.getLogger(__name__)

LOCK_SUFFIX = ".lock"

def lock_path_for(db_path: str) -> str:
    return db_path + LOCK_SUFFIX if db_path else ""

def _holder_info() -> dict:
    return {"host": socket.gethostname(), "user": getpass.getuser(), "pid": os.getpid(), "ts": int(time.time())}

class ResultsLock:
    """
    Exclusieve lock via een klein .lock-bestand naast de SQLite-resultaten.
    Beschermt commits van parallelle bench-workers (threads) en van andere processen.
    Zonder pad (bv. een niet-sqlite URL) is de lock alleen procesintern.
    """
    _threads = threading.RLock()

    def __init__(self, db_file_path: str, timeout: float = 30.0):
        self.db_file_path = db_file_path
        self.lock_file_path = lock_path_for(db_file_path)
        self.timeout = timeout
        self._fh = None

    def acquire(self) -> bool:
        """Wacht tot de lock vrij is (max timeout). True bij succes."""
        if not self._threads.acquire(timeout=self.timeout):
            return False
        if not self.lock_file_path:
            return True
        folder = os.path.dirname(self.lock_file_path)
        if folder:
            os.makedirs(folder, exist_ok=True)
        deadline = time.monotonic() + self.timeout
        while True:
            fh = open(self.lock_file_path, "a+")
            try:
                portalocker.lock(fh, portalocker.LOCK_EX | portalocker.LOCK_NB)
            except portalocker.exceptions.LockException:
                fh.close()
                if time.monotonic() >= deadline:
                    log.warning("lock %s bezet door %s", self.lock_file_path, self.holder() or "?")
                    self._threads.release()
                    return False
                time.sleep(0.05)
                continue
            fh.seek(0); fh.truncate()
            fh.write(json.dumps(_holder_info()))
            fh.flush(); os.fsync(fh.fileno())
            self._fh = fh
            return True

    def release(self):
        try:
            if self._fh:
                portalocker.unlock(self._fh)
                self._fh.close()
                self._fh = None
        except Exception:
            pass
        finally:
            self._threads.release()

    def holder(self) -> str:
        """'HOST\\user (pid)' van de huidige lockhouder, of ''."""
        p = self.lock_file_path
        if not p or not os.path.exists(p):
            return ""
        try:
            with open(p, "r") as f:
                data = json.loads(f.read() or "{}")
            return f"{data.get('host','?')}\\{data.get('user','?')} ({data.get('pid','?')})"
        except Exception:
            return ""

    def __enter__(self):
        if not self.acquire():
            raise TimeoutError(f"resultatenlock niet verkregen: {self.lock_file_path}")
        return self

    def __exit__(self, *exc):
        self.release()
        return False

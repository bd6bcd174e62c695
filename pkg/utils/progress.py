''' ScanProgress implements a thread-safe completion counter for scan points '''
import logging
import threading

logger = logging.getLogger(__name__)


class ScanProgress:
    """Thread-safe counter of finished scan points, logging every tenth of the scan"""

    def __init__(self, label: str, total: int):
        self.label = label
        self.total = max(total, 1)
        self._value = 0
        self._lock = threading.Lock()

    def tick(self) -> int:
        """Mark one point done (thread-safe)

        Returns:
            int: number of points done so far, starting from 1
        """
        with self._lock:
            self._value += 1
            done = self._value
        step = max(self.total // 10, 1)
        if done % step == 0 or done == self.total:
            logger.debug('%s: %d/%d points', self.label, done, self.total)
        return done

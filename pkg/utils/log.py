import logging
from typing import Optional

configured_flag = False

def setup_logging(level: int = logging.WARNING, file_name: Optional[str] = None):
    ''' Configure the logging facility, only once (stderr unless file_name is given)

        numpy/scipy RuntimeWarnings (overflow in expm, stiff solver steps) are
        routed into the same log.
    '''
    global configured_flag
    if not configured_flag:
        logging.basicConfig(
            level=level,
            format='%(asctime)s | %(levelname)s | %(name)s | %(message)s',
            datefmt='%Y-%m-%d %H:%M:%S',
            filename=file_name
        )
        logging.captureWarnings(True)
        configured_flag = True

import functools
import logging
import time


def named_stage(name):
    def decorator(original_func):
        logger = logging.getLogger(original_func.__module__)

        @functools.wraps(original_func)
        def decorated_func(*args, **kwargs):
            startTime = time.perf_counter()
            logger.debug("%s: start", name)
            result = original_func(*args, **kwargs)
            logger.debug("%s: done in %.3f sec", name, time.perf_counter() - startTime)
            return result
        return decorated_func

    return decorator

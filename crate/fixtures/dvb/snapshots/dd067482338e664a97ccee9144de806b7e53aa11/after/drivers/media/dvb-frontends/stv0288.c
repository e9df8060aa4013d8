/*
 * stv0288.c - DVB-S frontend driver (test fixture)
 */
#include <linux/kernel.h>
#include <linux/module.h>
#include <linux/string.h>
#include <linux/slab.h>
#include <media/dvb_frontend.h>

static int debug;

struct stv0288_priv {
	struct i2c_adapter *i2c;
	u8 diseqc_buf[8];
};

static int stv0288_read_status(struct dvb_frontend *fe, enum fe_status *status)
{
	struct stv0288 *state = fe->demodulator_priv;
	int sync = stv0288_readreg(state, 0x24);

	*status = 0;
	if (sync & 0x08)
		*status |= FE_HAS_LOCK;
	return 0;
}

static int stv0288_send_diseqc_msg(struct dvb_frontend *fe,
				    struct dvb_diseqc_master_cmd *m)
{
	struct stv0288 *state = fe->demodulator_priv;
	int i, ret = 0, status = 0;

	dprintk("%s\n", __func__);

	stv0288_writeregI(state, 0x09, 0);
	msleep(30);
	stv0288_writeregI(state, 0x05, 0x12);

	/* Validate length */
	if (m->msg_len > 6)
		return -EINVAL;

	memcpy(state->diseqc_buf, m->msg, m->msg_len);

	for (i = 0; i < m->msg_len; i++) {
		if (stv0288_writeregI(state, 0x06, state->diseqc_buf[i]))
			return -EREMOTEIO;
	}
	msleep(m->msg_len * 12);
	return 0;
}

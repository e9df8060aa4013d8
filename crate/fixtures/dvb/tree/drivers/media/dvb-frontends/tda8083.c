/*
 * tda8083.c - DVB-S frontend driver (test fixture)
 */
#include <linux/kernel.h>
#include <linux/module.h>
#include <linux/string.h>
#include <linux/slab.h>
#include <media/dvb_frontend.h>

static int debug;

struct tda8083_state_priv {
	struct i2c_adapter *i2c;
	u8 dsq_buf[8];
};

static int tda8083_read_status(struct dvb_frontend *fe, enum fe_status *status)
{
	struct tda8083_state *state = fe->demodulator_priv;
	int sync = tda8083_readreg(state, 0x24);

	*status = 0;
	if (sync & 0x08)
		*status |= FE_HAS_LOCK;
	return 0;
}

static int tda8083_send_diseqc_msg(struct dvb_frontend *fe,
				    struct dvb_diseqc_master_cmd *m)
{
	struct tda8083_state *state = fe->demodulator_priv;
	int i, ret = 0, status = 0;

	tda8083_writereg(state, 0x29, (m->msg_len - 3) | (1 << 2));

	memcpy(state->dsq_buf, m->msg, m->msg_len);

	for (i = 0; i < m->msg_len; i++)
		tda8083_writereg(state, 0x23 + i, state->dsq_buf[i]);

	tda8083_writereg(state, 0x29, (m->msg_len - 3) | (1 << 2));

	tda8083_wait_diseqc_fifo(state, 100);

	return 0;
}
